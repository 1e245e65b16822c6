''' Version string for the command line tools: git describe when run from a
    checkout, otherwise the contents of the VERSION file.
'''

__version__ = None

import subprocess, os, os.path

def get_project_path():
    '''Return the absolute path of the top-level project, assumed to be the
       parent of the directory containing this script.'''
    return os.path.dirname(os.path.dirname(os.path.abspath(os.path.expanduser(__file__))))

def call_git_describe():
    try:
        out = subprocess.check_output(['git', 'describe', '--tags', '--always', '--dirty'],
            cwd=get_project_path(), stderr=subprocess.DEVNULL)
    except (OSError, subprocess.CalledProcessError):
        return None
    return out.decode('utf-8').strip() or None

def release_file():
    return os.path.join(get_project_path(), 'VERSION')

def read_release_version():
    try:
        with open(release_file(), 'rt') as inf:
            return inf.readline().strip() or None
    except IOError:
        return None

def get_version():
    global __version__
    if __version__ is None:
        __version__ = call_git_describe() or read_release_version() or 'unknown'
    return __version__
