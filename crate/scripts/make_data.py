"""Regenerate the files under crates/rsr-core/data.

us48.edges: queen contiguity of the 48 contiguous states, vertices ordered by
postal abbreviation (see us48_states.txt).
slovenia_surrogate.edges: 194-vertex planar stand-in (Delaunay triangulation of
seeded random points) used when the municipality graph is not supplied.
sat_fixture.csv / slovenia_fixture.csv: synthetic data with the same columns as
the real SAT and Slovenia tables.
"""
import pathlib

import numpy as np
from scipy.spatial import Delaunay

OUT = pathlib.Path(__file__).resolve().parent.parent / "crates" / "rsr-core" / "data"

nb = """AL: FL GA TN MS
AZ: CA NV UT NM CO
AR: MO TN MS LA TX OK
CA: OR NV AZ
CO: WY NE KS OK NM UT AZ
CT: NY MA RI
DE: MD PA NJ
FL: AL GA
GA: FL AL TN NC SC
ID: WA OR NV UT WY MT
IL: WI IA MO KY IN
IN: IL MI OH KY
IA: MN WI IL MO NE SD
KS: NE MO OK CO
KY: IL IN OH WV VA TN MO
LA: TX AR MS
ME: NH
MD: VA WV PA DE
MA: RI CT NY NH VT
MI: OH IN WI
MN: WI IA SD ND
MS: LA AR TN AL
MO: IA IL KY TN AR OK KS NE
MT: ND SD WY ID
NE: SD IA MO KS CO WY
NV: ID UT AZ CA OR
NH: VT ME MA
NJ: DE PA NY
NM: AZ UT CO OK TX
NY: NJ PA CT MA VT
NC: VA TN GA SC
ND: MN SD MT
OH: PA WV KY IN MI
OK: KS MO AR TX NM CO
OR: CA NV ID WA
PA: NY NJ DE MD WV OH
RI: CT MA
SC: GA NC
SD: ND MN IA NE WY MT
TN: KY VA NC GA AL MS AR MO
TX: NM OK AR LA
UT: ID WY CO NM AZ NV
VT: NY NH MA
VA: NC TN KY WV MD
WA: ID OR
WV: OH PA MD VA KY
WI: MI MN IA IL
WY: MT SD NE CO UT ID"""


def us48():
    adj = {}
    for line in nb.strip().splitlines():
        s, rest = line.split(":")
        adj[s.strip()] = rest.split()
    states = sorted(adj)
    idx = {s: i for i, s in enumerate(states)}
    edges = set()
    for s, ns in adj.items():
        for t in ns:
            assert s in adj[t], (s, t)
            i, j = sorted((idx[s], idx[t]))
            edges.add((i, j))
    return states, sorted(edges)


def surrogate(n=194, seed=1994):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(size=(n, 2)) * np.array([1.6, 1.0])
    tri = Delaunay(pts)
    edges = set()
    for simplex in tri.simplices:
        for a in range(3):
            for b in range(a + 1, 3):
                i, j = sorted((int(simplex[a]), int(simplex[b])))
                edges.add((i, j))
    # drop long hull edges so degrees look more like a municipality map
    keep = []
    for i, j in sorted(edges):
        if np.linalg.norm(pts[i] - pts[j]) < 0.25:
            keep.append((i, j))
    return keep


def write_edges(path, n, edges, header):
    with open(path, "w") as fh:
        fh.write(f"# {header}\n# n = {n}\n")
        for i, j in edges:
            fh.write(f"{i} {j}\n")


def laplacian(n, edges):
    a = np.zeros((n, n))
    for i, j in edges:
        a[i, j] = a[j, i] = 1
    return np.diag(a.sum(1)) - a


def icar_draw(q, rng):
    lam, v = np.linalg.eigh(q)
    z = rng.standard_normal(len(lam))
    keep = lam > 1e-8 * lam.max()
    return v[:, keep] @ (z[keep] / np.sqrt(lam[keep]))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    states, e48 = us48()
    write_edges(OUT / "us48.edges", 48, e48, "queen contiguity, 48 contiguous US states")
    (OUT / "us48_states.txt").write_text("\n".join(states) + "\n")

    es = surrogate()
    write_edges(OUT / "slovenia_surrogate.edges", 194, es, "synthetic planar graph, 194 vertices")
    q = laplacian(194, es)
    assert np.sum(np.abs(np.linalg.eigvalsh(q)) < 1e-8) == 1, "surrogate must be connected"

    rng = np.random.default_rng(48)
    pct = np.round(rng.uniform(4, 80, 48)).astype(int)
    q48 = laplacian(48, e48)
    sp = 8.0 * icar_draw(q48, rng)
    verbal = np.round(590.5 - 2.84 * pct + 0.022 * pct**2 + sp + rng.normal(0, 12, 48)).astype(int)
    with open(OUT / "sat_fixture.csv", "w") as fh:
        fh.write("state,verbal,percent\n")
        for s, v, p in zip(states, verbal, pct):
            fh.write(f"{s},{v},{p}\n")

    rng = np.random.default_rng(194)
    expected = np.round(rng.gamma(3.0, 7.0, 194), 3) + 0.5
    seco = rng.standard_normal(194)
    seco = (seco - seco.mean()) / seco.std(ddof=1)
    nu = 0.3 * icar_draw(q, rng)
    observed = rng.poisson(expected * np.exp(-0.137 * seco + nu))
    with open(OUT / "slovenia_fixture.csv", "w") as fh:
        fh.write("municipality,observed,expected,seco\n")
        for i in range(194):
            fh.write(f"{i},{observed[i]},{expected[i]:.3f},{seco[i]:.6f}\n")


if __name__ == "__main__":
    main()
