# %% [markdown]
# # States, channels and entropies
#
# The quantum layer is plain numpy: kets and density matrices carry their
# subsystem dimensions, and every operation checks them.

# %%
import numpy as np

from sqrng.quantum import (
    StateVector,
    binary_entropy,
    conditional_entropy,
    depolarize,
    partial_trace,
    qubit,
    tensor,
    von_neumann_entropy,
)

# %% [markdown]
# A Bell pair: each half is maximally mixed, but conditioning on the partner
# leaves negative entropy.

# %%
amps = tensor(qubit("0"), qubit("0")).amplitudes + tensor(qubit("1"), qubit("1")).amplitudes
bell = StateVector((2, 2), amps, normalize=True).density()
print("S(A)   =", von_neumann_entropy(partial_trace(bell, [0])))
print("S(A|B) =", conditional_entropy(bell, [0], [1]))

# %% [markdown]
# Depolarizing a |+> state with parameter Q makes the wrong X outcome appear
# with probability Q.

# %%
for q in (0.0, 0.05, 0.25, 0.5):
    rho = depolarize(qubit("+").density(), q)
    p_minus = float(np.real(qubit("-").amplitudes.conj() @ rho.entries @ qubit("-").amplitudes))
    print(f"Q={q:<5} P(-)={p_minus:.3f}  h={binary_entropy(p_minus):.4f}")
