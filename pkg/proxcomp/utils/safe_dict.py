from proxcomp.utils.rw_lock import RWLock


class SafeDict(object):
    """ Dictionary guarded by a reader/writer lock. """

    def __init__(self):
        self.lock = RWLock()
        self.dict = {}

    def __str__(self):
        self.lock.acquire_read()
        try:
            return str(self.dict)
        finally:
            self.lock.release_read()

    def __len__(self):
        self.lock.acquire_read()
        try:
            return len(self.dict)
        finally:
            self.lock.release_read()

    def add_to_dict(self, key, value):
        self.lock.acquire_write()
        try:
            self.dict[key] = value
        finally:
            self.lock.release_write()

    def get_from_dict(self, key):
        self.lock.acquire_read()
        try:
            return self.dict.get(key)
        finally:
            self.lock.release_read()

    def get_or_create(self, key, factory):
        """
        Return the value stored under *key*, building it with *factory* on first use.
        The factory runs at most once per key, under the write lock.

        Args:
            key: The key.
            factory (callable): Zero-argument builder.
        Returns:
            The stored value.
        """
        value = self.get_from_dict(key)
        if value is not None:
            return value
        self.lock.acquire_write()
        try:
            if key not in self.dict:
                self.dict[key] = factory()
            return self.dict[key]
        finally:
            self.lock.release_write()

    def items(self):
        self.lock.acquire_read()
        try:
            return list(self.dict.items())
        finally:
            self.lock.release_read()

    def clear(self):
        self.lock.acquire_write()
        try:
            self.dict.clear()
        finally:
            self.lock.release_write()
