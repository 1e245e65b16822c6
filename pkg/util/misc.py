'''A few miscellaneous tools. '''
import itertools, zlib
import numpy as np

def histogram(items):
    ''' I count the number of times I see stuff and return a dict of counts. '''
    out = {}
    for i in items:
        out.setdefault(i, 0)
        out[i] += 1
    return out

def mode_lowest(items):
    ''' Most frequent item; ties go to the smallest item. '''
    counts = histogram(items)
    if not counts:
        raise ValueError("mode of an empty sequence")
    best = max(counts.values())
    return min(k for k,v in counts.items() if v == best)

# from http://stackoverflow.com/a/312467
def batch_iterator(iterator, batch_size) :
    """Returns lists of length batch_size.

    This is a generator function, and it returns lists of the
    entries from the supplied iterator.  Each list will have
    batch_size entries, although the final list may be shorter.
    """
    it = iter(iterator)
    item = list(itertools.islice(it, batch_size))
    while item:
        yield item
        item = list(itertools.islice(it, batch_size))

def stage_seed(root_seed, stage):
    ''' Derive a reproducible per-stage seed from the root seed. The stage
        name is hashed with CRC32 so the mapping is stable across Python
        processes, and numpy's SeedSequence mixes the pair.
    '''
    key = zlib.crc32(stage.encode('utf-8')) & 0xffffffff
    return int(np.random.SeedSequence([int(root_seed), key]).generate_state(1)[0])
