from .library import BenchmarkSpec, Instance, GENERATORS, register_generator, problem_names, generate
from .runner import RunRecord, RunReport, run_one, run_benchmarks
