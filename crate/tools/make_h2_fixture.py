"""Regenerate crates/core/fixtures/h2_sto3g_jw.txt.

H2 at 0.74 Angstrom, STO-3G, restricted Hartree-Fock orbitals, Jordan-Wigner
encoding. Spin orbital 2p is spatial orbital p with spin up, 2p+1 spin down.
Qubit j is spin orbital j; qubit 0 is the leftmost Pauli letter and the most
significant tensor factor. Occupied orbitals map to |1>.
"""
import itertools
import sys

import numpy as np
from pyscf import ao2mo, fci, gto, scf

BOND = 0.74

mol = gto.M(atom=f"H 0 0 0; H 0 0 {BOND}", basis="sto-3g", unit="Angstrom", verbose=0)
mf = scf.RHF(mol)
mf.verbose = 0
mf.conv_tol = 1e-12
mf.kernel()
c = mf.mo_coeff
h1 = c.T @ mf.get_hcore() @ c
norb = h1.shape[0]
eri = ao2mo.restore(1, ao2mo.kernel(mol, c), norb)  # chemist (ij|kl)
e_nuc = mol.energy_nuc()
e_fci = fci.FCI(mf).kernel()[0]

nq = 2 * norb
I2 = np.eye(2)
Z = np.diag([1.0, -1.0])
create = np.array([[0.0, 0.0], [1.0, 0.0]])  # |1><0|


def kron_all(ops):
    out = np.array([[1.0]])
    for op in ops:
        out = np.kron(out, op)
    return out


adag = [kron_all([Z] * j + [create] + [I2] * (nq - j - 1)) for j in range(nq)]
a = [m.conj().T for m in adag]

dim = 2 ** nq
H = e_nuc * np.eye(dim)
for p, q in itertools.product(range(nq), repeat=2):
    if p % 2 == q % 2:
        H += h1[p // 2, q // 2] * adag[p] @ a[q]
for p, q, r, s in itertools.product(range(nq), repeat=4):
    if p % 2 == r % 2 and q % 2 == s % 2:
        v = eri[p // 2, r // 2, q // 2, s // 2]
        if abs(v) > 0:
            H += 0.5 * v * adag[p] @ adag[q] @ a[s] @ a[r]

paulis = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": Z,
}
terms = []
for letters in itertools.product("IXYZ", repeat=nq):
    label = "".join(letters)
    coeff = np.trace(kron_all([paulis[x] for x in letters]) @ H) / dim
    assert abs(coeff.imag) < 1e-12
    if abs(coeff.real) > 1e-12:
        terms.append((coeff.real, label))

ground = np.linalg.eigvalsh(H).min()
assert abs(ground - e_fci) < 1e-9, (ground, e_fci)

out = sys.stdout
out.write("# H2 molecular Hamiltonian, Jordan-Wigner encoded\n")
out.write(f"# n={nq}\n")
out.write(f"# geometry=H 0 0 0; H 0 0 {BOND} (angstrom)\n")
out.write("# basis=sto-3g\n")
out.write("# qubit_ordering=spin orbital j on qubit j, alternating up/down, leftmost letter is qubit 0\n")
out.write("# hf_bits=1100\n")
out.write(f"# hf_energy_hartree={mf.e_tot:.12f}\n")
out.write(f"# reference_ground_energy_hartree={ground:.12f}\n")
for coeff, label in terms:
    out.write(f"{coeff:.15f} {label}\n")
