'''A few small statistics helpers shared by the metric code. '''

import numpy as np

def safe_ratio(num, den):
    ''' num/den, or 0.0 when the denominator is zero. '''
    return float(num) / den if den else 0.0

def moving_average(values, window):
    ''' Trailing moving average; output has len(values)-window+1 entries. '''
    values = np.asarray(values, dtype=float)
    if window < 1 or window > len(values):
        return []
    return np.convolve(values, np.full(window, 1.0 / window), mode='valid').tolist()
