import threading


# Reader/writer lock after the O'Reilly Python Cookbook recipe.
class RWLock:
    def __init__(self):
        self._read_ready = threading.Condition(threading.RLock())
        self._num_reader = 0

    def acquire_read(self):
        with self._read_ready:
            self._num_reader += 1

    def release_read(self):
        with self._read_ready:
            self._num_reader -= 1
            if not self._num_reader:
                self._read_ready.notify_all()

    def acquire_write(self):
        self._read_ready.acquire()
        while self._num_reader > 0:
            self._read_ready.wait()

    def release_write(self):
        self._read_ready.release()
