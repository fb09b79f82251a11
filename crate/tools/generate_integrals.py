"""Regenerate the bundled FCIDUMP files and reference energies.

Requires pyscf. Only needed when the bundled data changes; the Rust crates
read the files in crates/core/data and never call out to Python.

    python3 tools/generate_integrals.py crates/core/data
"""
import json
import sys

import numpy as np
from pyscf import ao2mo, gto, mcscf, scf

BEH2_BOND = 1.3264  # Angstrom, linear H-Be-H

MOLECULES = {
    "h2": dict(atom="H 0 0 0; H 0 0 0.735", note="H2, R = 0.735 A"),
    "lih": dict(atom="Li 0 0 0; H 0 0 1.5949", note="LiH, R = 1.5949 A"),
    "beh2": dict(
        atom=f"Be 0 0 0; H 0 0 {BEH2_BOND}; H 0 0 {-BEH2_BOND}",
        note=f"BeH2, linear, R(Be-H) = {BEH2_BOND} A",
    ),
}

# (molecule, name, frozen orbitals, active orbitals, active electrons); 0-based
ACTIVE_SPACES = [
    ("h2", "h2", [], [0, 1], 2),
    ("lih", "lih", [0], [1, 2, 3, 4, 5], 2),
    ("beh2", "beh2", [0], [1, 2, 3, 4, 5, 6], 4),
    ("beh2", "beh2_sub2", [0, 1], [2, 5], 2),
    ("beh2", "beh2_sub4", [0], [1, 2, 5, 6], 4),
]


def write_fcidump(path, h1, eri, ecore, norb, nelec, tol=1e-14):
    lines = [f"&FCI NORB={norb},NELEC={nelec},MS2=0,", " ORBSYM=" + "1," * norb, " ISYM=1,", "&END"]
    for i in range(norb):
        for j in range(i + 1):
            for k in range(norb):
                for l in range(k + 1):
                    ij = i * (i + 1) // 2 + j
                    kl = k * (k + 1) // 2 + l
                    if ij < kl:
                        continue
                    v = eri[i, j, k, l]
                    if abs(v) > tol:
                        lines.append(f"{float(v)!r} {i + 1} {j + 1} {k + 1} {l + 1}")
    for i in range(norb):
        for j in range(i + 1):
            v = h1[i, j]
            if abs(v) > tol:
                lines.append(f"{float(v)!r} {i + 1} {j + 1} 0 0")
    lines.append(f"{float(ecore)!r} 0 0 0 0")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def main(out):
    manifest = {"basis": "sto-3g", "generator": "pyscf RHF + CASCI", "molecules": {}, "active_spaces": {}}
    scfs = {}
    for name, m in MOLECULES.items():
        mol = gto.M(atom=m["atom"], basis="sto-3g", unit="Angstrom", verbose=0)
        mf = scf.RHF(mol).run()
        scfs[name] = mf
        c = mf.mo_coeff
        h1 = c.T @ mf.get_hcore() @ c
        norb = c.shape[1]
        eri = ao2mo.restore(1, ao2mo.kernel(mol, c), norb)
        write_fcidump(f"{out}/{name}.fcidump", h1, eri, mol.energy_nuc(), norb, mol.nelectron)
        manifest["molecules"][name] = dict(
            geometry=m["note"], atom=m["atom"], n_orbitals=norb, n_electrons=mol.nelectron,
            hf_energy=mf.e_tot, nuclear_repulsion=mol.energy_nuc(),
        )
    for mol_name, name, frozen, active, nel in ACTIVE_SPACES:
        mf = scfs[mol_name]
        mc = mcscf.CASCI(mf, len(active), nel)
        # sort_mo takes 1-based indices of the active orbitals; the core is
        # filled from the lowest remaining orbitals.
        mo = mc.sort_mo([a + 1 for a in active])
        assert mc.ncore == len(frozen)
        e = mc.kernel(mo)[0]
        manifest["active_spaces"][name] = dict(
            molecule=mol_name, frozen=frozen, active=active, active_electrons=nel, casci_energy=e,
        )
    with open(f"{out}/manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/data")
