'''This gives a number of useful quick methods for dealing with
project paths, temp files, and the JSON/PPM artifacts every stage writes.
'''

import os, tempfile, shutil, errno, logging, json, math
import numpy as np
import util.cmd

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

def get_project_path() :
    '''Return the absolute path of the top-level project, assumed to be the
       parent of the directory containing this script.'''
    # abspath converts relative to absolute path; expanduser interprets ~
    path = __file__                  # path to this script
    path = os.path.expanduser(path)  # interpret ~
    path = os.path.abspath(path)     # convert to absolute path
    path = os.path.dirname(path)     # containing directory: util
    path = os.path.dirname(path)     # containing directory: main project dir
    return path

def get_pipes_path() :
    '''Return absolute path of "pipes" directory'''
    return os.path.join(get_project_path(), 'pipes')

def get_test_path() :
    '''Return absolute path of "test" directory'''
    return os.path.join(get_project_path(), 'test')

def get_test_input_path(testClassInstance=None) :
    '''Return the path to the directory containing input files for the specified
       test class
    '''
    if testClassInstance is not None :
        return os.path.join(get_test_path(), 'input',
                            type(testClassInstance).__name__)
    else:
        return os.path.join(get_test_path(), 'input')

def mkstempfname(suffix='', prefix='tmp', dir=None, text=False):
    ''' There's no other one-liner way to securely ask for a temp file by
        filename only.  This calls mkstemp, which does what we want, except
        that it returns an open file handle, which causes huge problems on NFS
        if we don't close it.  So close it first then return the name part only.
    '''
    fd, fn = tempfile.mkstemp(prefix=prefix, suffix=suffix, dir=dir, text=text)
    os.close(fd)
    return fn

def set_tmpDir(name):
    proposed_prefix = ['tmp']
    if name:
        proposed_prefix.append(name)
    tempfile.tempdir = tempfile.mkdtemp(prefix='-'.join(proposed_prefix)+'-',
                                        dir=util.cmd.find_tmpDir())

def destroy_tmpDir():
    if tempfile.tempdir:
        shutil.rmtree(tempfile.tempdir)
    tempfile.tempdir = None

def mkdir_p(dirpath):
    ''' Verify that the directory given exists, and if not, create it.
    '''
    try:
        os.makedirs(dirpath)
    except OSError as exc:
        if exc.errno == errno.EEXIST and os.path.isdir(dirpath):
            pass
        else: raise

# ============ JSON artifacts ============

def _jsonable(obj):
    ''' Convert numpy scalars/arrays and non-finite floats into plain JSON
        values. NaN and +-inf become None.
    '''
    if isinstance(obj, dict):
        return dict((str(k), _jsonable(v)) for k,v in obj.items())
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj

def write_json(obj, outFile):
    ''' Write a JSON artifact. A schema_version key is added to top-level
        dicts; keys are sorted so equal content gives equal bytes.
    '''
    obj = _jsonable(obj)
    if isinstance(obj, dict):
        obj.setdefault('schema_version', SCHEMA_VERSION)
    with open(outFile, 'wt') as outf:
        json.dump(obj, outf, indent=1, sort_keys=True, allow_nan=False)
        outf.write('\n')

def read_json(inFile):
    with open(inFile, 'rt') as inf:
        return json.load(inf)

def none_to_inf(v, fill=float('inf')):
    return fill if v is None else v

# ============ rasters ============

def write_ppm(rgb, outFile):
    ''' Write an (height, width, 3) uint8 array as a binary PPM (P6).
        Row 0 of the array is the top row of the image.
    '''
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    assert rgb.ndim == 3 and rgb.shape[2] == 3
    height, width = rgb.shape[:2]
    with open(outFile, 'wb') as outf:
        outf.write(('P6\n%d %d\n255\n' % (width, height)).encode('ascii'))
        outf.write(rgb.tobytes())

def read_ppm(inFile):
    with open(inFile, 'rb') as inf:
        data = inf.read()
    fields = []
    pos = 0
    while len(fields) < 4:
        while data[pos:pos+1].isspace():
            pos += 1
        start = pos
        while not data[pos:pos+1].isspace():
            pos += 1
        fields.append(data[start:pos].decode('ascii'))
    if fields[0] != 'P6':
        raise ValueError("not a binary PPM: %s" % inFile)
    width, height = int(fields[1]), int(fields[2])
    pixels = np.frombuffer(data[pos+1:pos+1+width*height*3], dtype=np.uint8)
    return pixels.reshape(height, width, 3)
