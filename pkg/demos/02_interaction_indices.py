"""
From Fourier coefficients to attribution scores
===============================================

Every index here is a fixed linear map of the sparse spectrum, so once the
spectrum is known they are all cheap. At n=8 we can also brute force each
one from its cooperative-game definition and check the two agree.
"""

import numpy as np

from spex.decoder import RecoveredSpectrum
from spex.gf2 import BinaryVector
from spex.indices import (brute_faith_shap, brute_shapley_value, dense_game, to_banzhaf_ii, to_faith_shap,
                          to_mobius, to_shapley_value)

n = 8


def s(*features):
    return BinaryVector.from_indices(n, features)


# a toy game: a baseline, two main effects and one pairwise synergy
spectrum = RecoveredSpectrum(n, {s(): 1.0, s(0): -0.4, s(3): -0.25, s(0, 3): 0.15, s(2, 5, 6): 0.05})

mob = to_mobius(spectrum)
print("Mobius (Harsanyi dividends), largest first:")
for subset, v in mob.ranked()[:6]:
    print(f"  {subset.support()}: {v:+.3f}")

# Banzhaf singletons are read straight off the spectrum: -2 F({i})
bz = to_banzhaf_ii(spectrum)
print("Banzhaf value of feature 0:", bz.value([0]))

sv = to_shapley_value(spectrum)
print("Shapley values:", np.round([sv.value([i]) for i in range(n)], 4))

# efficiency: the Shapley values split f(all) - f(none)
f_all, f_none = spectrum(np.ones((1, n), dtype=np.uint8))[0], spectrum(np.zeros((1, n), dtype=np.uint8))[0]
print(f"sum of SV = {sum(sv.attributions.values()):.6f}, f(1) - f(0) = {f_all - f_none:.6f}")

# brute-force cross checks over all 2^8 coalitions
game = dense_game(spectrum)
slow = brute_shapley_value(game)
print("Shapley gap vs permutation oracle:", max(abs(sv[k] - slow[k]) for k in slow.attributions))

fs, fs_slow = to_faith_shap(spectrum, 2), brute_faith_shap(game, 2)
keys = set(fs.attributions) | set(fs_slow.attributions)
print("Faith-Shap (order 2) gap vs weighted least squares:", max(abs(fs[k] - fs_slow[k]) for k in keys))
