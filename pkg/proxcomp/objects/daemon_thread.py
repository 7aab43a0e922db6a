import threading


class DaemonThread(threading.Thread):
    """ A daemon thread that runs one benchmark task and records any exception it raised. """

    def __init__(self, target, args=None):
        self._task = target
        self._task_args = tuple(args) if args is not None else ()
        self.exception = None
        super().__init__(target=self._run_task, daemon=True)
        self.start()

    def _run_task(self):
        try:
            self._task(*self._task_args)
        except BaseException as e:
            self.exception = e
