"""Temperature scaling and why its optimum balances two forces.

Mean NLL over a labeled set splits exactly into a correct-prediction
term and a wrong-prediction term. Raising the temperature flattens
confidence, which hurts the correct split and helps the wrong split;
the fitted temperature is the point where the weighted pull of the two
sides cancels.
"""

import numpy as np

from pseudocal import PredictionBatch, ece, fit_temperature, nll_decomposition

rng = np.random.default_rng(1)

# A classifier with realistic structure: each sample has a true class
# and a variable margin, so low-margin samples are the ones that go
# wrong. The 3x sharpening on top makes it overconfident everywhere.
n, classes = 3000, 5
labels = rng.integers(0, classes, n)
margins = rng.gamma(2.0, 1.5, n)
logits = rng.standard_normal((n, classes))
logits[np.arange(n), labels] += margins
batch = PredictionBatch(logits=logits * 3.0, labels=labels)

print("temperature   total NLL   correct term   wrong term")
for t in (0.5, 1.0, 2.0, 4.0, 8.0):
    dec = nll_decomposition(batch, t)
    print(f"{t:>11.1f}   {dec.total:>9.4f}   {dec.correct_term:>12.4f}   {dec.wrong_term:>10.4f}")

cal = fit_temperature(batch)
dec = nll_decomposition(batch, cal.temperature)
print(f"\nfitted T = {cal.temperature:.3f} "
      f"(splits: {dec.n_correct} correct / {dec.n_wrong} wrong)")
print(f"ECE before: {ece(batch):.4f}   ECE after: {ece(cal.apply(batch)):.4f}")

# The transform never moves a decision boundary.
assert np.array_equal(cal.apply(batch).predictions(), batch.predictions())
