from avsync.mst import TestList

# domain type, not a test class
TestList.__test__ = False
