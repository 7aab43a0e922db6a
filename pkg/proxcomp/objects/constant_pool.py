import hashlib

import numpy as np
import scipy.sparse as sp

from proxcomp.utils.safe_dict import SafeDict


class ConstantData(object):
    """
    Numeric payload of a constant node. Values are stored as a read-only 2-D
    array; sparse constants additionally keep their compressed-column matrix.
    """

    def __init__(self, key, value, sparse=None):
        self._key = key
        self._value = value
        self._sparse = sparse

    @property
    def key(self):
        return self._key

    @property
    def value(self):
        return self._value

    @property
    def sparse(self):
        return self._sparse

    @property
    def is_sparse(self):
        return self._sparse is not None

    @property
    def shape(self):
        return self._value.shape

    def vec(self):
        return self._value.reshape(-1, order='F')


def content_key(value, is_sparse=False):
    digest = hashlib.sha1()
    digest.update(str(value.shape).encode())
    digest.update(b'S' if is_sparse else b'D')
    digest.update(np.ascontiguousarray(value, dtype=float).tobytes())
    return digest.hexdigest()


class ConstantPool(object):
    """
    Append-only pool of constant tensors keyed by content hash. Inserts are
    synchronized, so identical data built on different threads share one entry.
    """
    __instance = None

    @staticmethod
    def get_instance():
        if ConstantPool.__instance is None:
            ConstantPool()
        return ConstantPool.__instance

    def __init__(self):
        if ConstantPool.__instance is None:
            self._pool = SafeDict()
            ConstantPool.__instance = self
        else:
            raise Exception('this is a singleton class')

    def intern(self, value):
        """
        Store a tensor and return its pooled payload.

        Args:
            value (ndarray, scalar or scipy sparse matrix): The data.
        Returns:
            (ConstantData): The pooled constant.
        """
        sparse = None
        if sp.issparse(value):
            sparse = sp.csc_matrix(value, dtype=float, copy=True)
            sparse.sum_duplicates()
            sparse.sort_indices()
            dense = sparse.toarray()
        else:
            dense = np.array(value, dtype=float)
            if dense.ndim == 0:
                dense = dense.reshape(1, 1)
            elif dense.ndim == 1:
                dense = dense.reshape(-1, 1)
            elif dense.ndim > 2:
                raise ValueError('constants are at most 2-dimensional')
        dense.setflags(write=False)
        key = content_key(dense, sparse is not None)
        return self._pool.get_or_create(key, lambda: ConstantData(key, dense, sparse))

    def get(self, key):
        return self._pool.get_from_dict(key)

    def __len__(self):
        return len(self._pool)
