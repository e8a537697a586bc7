import numpy as np
import pytest

from wavecorr.network import (
    Netlist,
    NetlistError,
    NoiseModel,
    PropagationError,
    add_mesh,
    add_state_prep,
    build_measurement_block,
    build_sequence_tree,
    element_normals,
    leaf_distribution_csv,
    port_distribution,
    propagate,
    tree_distribution,
)
from wavecorr.outcomes import outcome_signs
from wavecorr.reck import decompose
from wavecorr.wavecore import (
    WaveState,
    binary_labels,
    luders_project,
    pauli_observable,
    sequential_distribution,
    state_library,
)

SQRT2 = np.sqrt(2.0)


def hybrid_ring():
    net = Netlist()
    net.add_input("u")
    net.add_input("v")
    net.beam_splitter("u", "v", "s", "d")
    net.add_output("s")
    net.add_output("d")
    return net


# ------------------------------------------------------------ elements


def test_hybrid_ring_sum_diff():
    pa = propagate(hybrid_ring(), {"u": 1.0, "v": 0.0})
    assert pa.amplitudes["s"] == pytest.approx(1 / SQRT2)
    assert pa.amplitudes["d"] == pytest.approx(1 / SQRT2)
    pa = propagate(hybrid_ring(), {"u": 0.0, "v": 1.0})
    assert pa.amplitudes["s"] == pytest.approx(1 / SQRT2)
    assert pa.amplitudes["d"] == pytest.approx(-1 / SQRT2)


def test_phase_segment_and_coupler():
    net = Netlist()
    net.add_input("a")
    net.phase_segment("a", "b", np.pi / 2)
    net.add_output("b")
    pa = propagate(net, {"a": 1.0})
    assert pa.amplitudes["b"] == pytest.approx(1j)

    net = Netlist()
    net.add_input("s")
    net.unequal_coupler("s", "t1", "t2", SQRT2 - 1.0)
    net.add_output("t1")
    net.add_output("t2")
    pa = propagate(net, {"s": 1.0})
    r = SQRT2 - 1.0
    assert pa.amplitudes["t1"] == pytest.approx(1 / np.sqrt(1 + r * r))
    assert pa.amplitudes["t2"] == pytest.approx(r / np.sqrt(1 + r * r))
    assert pa.output_intensity == pytest.approx(1.0, abs=1e-12)


def test_termination_absorbs():
    net = Netlist()
    net.add_input("a")
    net.termination("a")
    pa = propagate(net, {"a": 1.0})
    assert pa.absorbed_intensity == pytest.approx(1.0)
    assert pa.output_intensity == 0.0


def test_per_element_overrides():
    net = Netlist()
    net.add_input("a")
    net.phase_segment("a", "b", 0.0, jitter=np.pi)
    net.add_output("b")
    pa = propagate(net, {"a": 1.0})
    assert pa.amplitudes["b"] == pytest.approx(-1.0)
    # leakage override beats the model value
    net = Netlist()
    net.add_input("a")
    net.phase_segment("a", "b", 0.0, leakage=0.5)
    net.add_output("b")
    pa = propagate(net, {"a": 1.0}, NoiseModel(leakage=0.0))
    assert abs(pa.amplitudes["b"]) ** 2 == pytest.approx(0.5)


# ------------------------------------------------------------ validation


def test_wiring_validation():
    net = Netlist()
    net.add_input("a")
    net.beam_splitter("a", "missing", "s", "d")
    with pytest.raises(NetlistError):
        net.validate()

    net = Netlist()
    net.add_input("a")
    net.phase_segment("a", "b", 0.0)
    net.phase_segment("a", "c", 0.0)  # double read
    with pytest.raises(NetlistError):
        net.validate()

    net = Netlist()
    net.add_input("a")
    net.phase_segment("a", "b", 0.0)  # b driven, never read
    with pytest.raises(NetlistError):
        net.validate()

    net = Netlist()
    net.add_input("a")
    net.phase_segment("a", "a2", 0.0)
    net.add_output("a2")
    net.validate()


def test_drive_must_match_ports():
    net = hybrid_ring()
    with pytest.raises(PropagationError):
        propagate(net, {"u": 1.0})
    with pytest.raises(PropagationError):
        propagate(net, {"u": 1.0, "v": 0.0, "w": 0.0})


# ------------------------------------------------------------- noise RNG


def test_element_normals_deterministic_and_keyed():
    idx = np.arange(64, dtype=np.uint64)
    a = element_normals(123, idx)
    b = element_normals(123, idx)
    np.testing.assert_array_equal(a, b)
    c = element_normals(124, idx)
    assert np.max(np.abs(a - c)) > 1e-3
    # order independence: draws depend only on the element index
    sub = element_normals(123, idx[10:20])
    np.testing.assert_array_equal(sub, a[10:20])


def test_element_normals_are_roughly_standard():
    draws = element_normals(7, np.arange(200_000, dtype=np.uint64))
    assert abs(np.mean(draws)) < 0.01
    assert abs(np.std(draws) - 1.0) < 0.01


# -------------------------------------------------------------- meshes


def test_mesh_fragment_matches_matrix():
    rng = np.random.default_rng(5)
    for n in (2, 3, 4):
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        q, r = np.linalg.qr(a)
        u = q * (np.diag(r) / np.abs(np.diag(r)))
        plan = decompose(u)
        net = Netlist()
        ins = [net.add_input(f"in{i}") for i in range(n)]
        outs = add_mesh(net, plan, ins, "m")
        for w in outs:
            net.add_output(w)
        for col in range(n):
            drive = {f"in{i}": (1.0 if i == col else 0.0) for i in range(n)}
            pa = propagate(net, drive)
            got = np.array([pa.amplitudes[w] for w in outs])
            np.testing.assert_allclose(got, u[:, col], atol=1e-9)


# ---------------------------------------------------------------- preps


def test_singlet_prep():
    net = Netlist()
    wires = add_state_prep(net, "singlet")
    for w in wires:
        net.add_output(w)
    pa = propagate(net, {"prep.src": 1.0})
    got = np.array([pa.amplitudes[w] for w in wires])
    np.testing.assert_allclose(got, state_library("singlet").amplitudes, atol=1e-12)


def test_chsh_prep_through_coupler_and_rings():
    net = Netlist()
    wires = add_state_prep(net, "chsh")
    for w in wires:
        net.add_output(w)
    kinds = [el.kind for el in net.elements]
    assert kinds.count("unequal_coupler") == 1
    assert kinds.count("beam_splitter") == 2
    pa = propagate(net, {"prep.src": 1.0})
    got = np.array([pa.amplitudes[w] for w in wires])
    np.testing.assert_allclose(got, state_library("chsh").amplitudes, atol=1e-12)


def test_ghz_prep_postselects_an_eighth():
    net = Netlist()
    wires = add_state_prep(net, "ghz")
    for w in wires:
        net.add_output(w)
    pa = propagate(net, {"prep.src": 1.0})
    got = np.array([pa.amplitudes[w] for w in wires])
    ghz = state_library("ghz").amplitudes
    assert pa.output_intensity == pytest.approx(1.0 / 8.0, abs=1e-12)
    np.testing.assert_allclose(got, ghz / np.sqrt(8.0), atol=1e-9)
    assert pa.absorbed_intensity == pytest.approx(7.0 / 8.0, abs=1e-12)


def test_mesh_prep_arbitrary_state():
    net = Netlist()
    wires = add_state_prep(net, "psi11")
    for w in wires:
        net.add_output(w)
    pa = propagate(net, {"prep.src": 1.0})
    got = np.array([pa.amplitudes[w] for w in wires])
    np.testing.assert_allclose(got, state_library("psi11").amplitudes, atol=1e-9)


# ---------------------------------------------------------------- blocks


@pytest.mark.parametrize("spec", ["ZI", "IX", "YY", "ZZ"])
@pytest.mark.parametrize("name", ["chsh", "psi7", "psi10", "psi11"])
def test_block_branches_equal_luders_branches(spec, name):
    psi = state_library(name)
    obs = pauli_observable(spec)
    net = Netlist()
    ins = [net.add_input(b) for b in psi.labels]
    up, lo = build_measurement_block(net, obs, ins, "blk")
    for w in up + lo:
        net.add_output(w)
    pa = propagate(net, psi)
    for outcome, wires in ((+1, up), (-1, lo)):
        got = np.array([pa.amplitudes[w] for w in wires])
        prob, post = luders_project(psi, obs, outcome)
        want = (
            np.sqrt(prob) * post.amplitudes
            if post is not None
            else np.zeros(psi.dim, dtype=complex)
        )
        np.testing.assert_allclose(got, want, atol=1e-9)


def test_block_routing_example():
    # measuring ZI on |00> puts everything on the upper branch, mode 00
    psi = state_library("00")
    net = Netlist()
    ins = [net.add_input(b) for b in psi.labels]
    up, lo = build_measurement_block(net, pauli_observable("ZI"), ins, "blk")
    for w in up + lo:
        net.add_output(w)
    pa = propagate(net, psi)
    assert pa.intensity(up[0]) == pytest.approx(1.0, abs=1e-12)
    assert sum(pa.intensity(w) for w in lo) == pytest.approx(0.0, abs=1e-12)


# ----------------------------------------------------------------- trees


def test_tree_shape_and_leaf_count():
    obs = [pauli_observable(s) for s in ("ZX", "XZ", "YY")]
    tree = build_sequence_tree(obs, prep="psi7")
    assert tree.depth == 3
    assert set(tree.leaf_groups) == {
        "".join(t) for t in __import__("itertools").product("+-", repeat=3)
    }
    assert tree.leaf_count == 4 * 2**3
    with pytest.raises(ValueError):
        build_sequence_tree([])
    with pytest.raises(ValueError):
        build_sequence_tree(obs + obs)


@pytest.mark.parametrize(
    "prep,specs",
    [
        ("chsh", ("ZI", "IZ")),
        ("singlet", ("ZI", "IX")),
        ("psi7", ("ZX", "XZ", "YY")),
        ("ghz", ("ZII", "IZI", "IIX")),
    ],
)
def test_tree_path_symmetry(prep, specs):
    tree = build_sequence_tree([pauli_observable(s) for s in specs], prep=prep)
    # every amplitude-carrying path crosses the same number of elements
    totals = tree.path_total_counts()  # raises if unequal paths ever meet
    assert len(set(totals.values())) == 1
    # and every branch chain is built from identically composed fragments
    baseline = None
    for outcome, tally in tree.branch_kind_counts.items():
        if baseline is None:
            baseline = tally
        assert tally == baseline, f"branch {outcome} differs: {tally} vs {baseline}"


@pytest.mark.parametrize("name", ["chsh", "singlet", "psi7", "psi11"])
def test_tree_matches_sequential_oracle(name):
    psi = state_library(name)
    obs = [pauli_observable("ZX"), pauli_observable("XZ"), pauli_observable("YY")]
    tree = build_sequence_tree(obs, prep=name)
    dist = tree_distribution(tree)
    oracle = sequential_distribution(psi, obs)
    for outcome in oracle.probs:
        assert dist.prob(outcome) == pytest.approx(oracle.prob(outcome), abs=1e-9)


def test_tree_with_bare_inputs_accepts_states():
    obs = [pauli_observable("ZI"), pauli_observable("IZ")]
    tree = build_sequence_tree(obs, prep=None)
    for name in ("psi5", "psi9"):
        psi = state_library(name)
        dist = tree_distribution(tree, psi)
        oracle = sequential_distribution(psi, obs)
        for outcome in oracle.probs:
            assert dist.prob(outcome) == pytest.approx(oracle.prob(outcome), abs=1e-9)
    with pytest.raises(PropagationError):
        tree_distribution(tree)  # needs a drive


def test_repeated_observable_tree_is_diagonal():
    tree = build_sequence_tree([pauli_observable("IX")] * 3, prep="chsh")
    dist = tree_distribution(tree)
    mixed = dist.mass_where(lambda o: len(set(o)) > 1)
    assert mixed == pytest.approx(0.0, abs=1e-12)


# ------------------------------------------------------------ invariants


def test_zero_noise_conserves_intensity():
    obs = [pauli_observable("ZI"), pauli_observable("IZ")]
    tree = build_sequence_tree(obs, prep="chsh")
    pa = propagate(tree.netlist, {"prep.src": 1.0})
    assert pa.output_intensity + pa.absorbed_intensity == pytest.approx(
        pa.input_intensity, abs=1e-12
    )
    assert pa.absorbed_intensity == pytest.approx(0.0, abs=1e-12)


def test_uniform_leakage_leaves_distribution_unchanged():
    obs = [pauli_observable("ZX"), pauli_observable("XZ"), pauli_observable("YY")]
    tree = build_sequence_tree(obs, prep="psi7")
    ideal = tree_distribution(tree)
    lossy = tree_distribution(tree, noise=NoiseModel(leakage=0.05))
    for outcome in ideal.probs:
        assert lossy.prob(outcome) == pytest.approx(ideal.prob(outcome), abs=1e-9)
    # but energy really is lost
    pa = propagate(tree.netlist, {"prep.src": 1.0}, NoiseModel(leakage=0.05))
    assert pa.absorbed_intensity > 0.5
    assert pa.output_intensity + pa.absorbed_intensity == pytest.approx(
        pa.input_intensity, abs=1e-10
    )


def test_noisy_propagation_is_reproducible():
    obs = [pauli_observable("ZI"), pauli_observable("IZ")]
    tree = build_sequence_tree(obs, prep="chsh")
    nm = NoiseModel(splitter_imbalance_sigma=0.02, phase_jitter_sigma=0.05, seed=42)
    d1 = tree_distribution(tree, noise=nm)
    d2 = tree_distribution(tree, noise=nm)
    assert d1.probs == d2.probs
    d3 = tree_distribution(tree, noise=NoiseModel(**{**nm.__dict__, "seed": 43}))
    assert d1.probs != d3.probs


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(splitter_imbalance_sigma=-0.1)
    with pytest.raises(ValueError):
        NoiseModel(leakage=1.0)


def chsh_value(noise=None):
    terms = [("ZI", "IZ", 1), ("XI", "IZ", 1), ("ZI", "IX", 1), ("XI", "IX", -1)]
    total = 0.0
    for a, b, sign in terms:
        tree = build_sequence_tree([pauli_observable(a), pauli_observable(b)], prep="chsh")
        dist = tree_distribution(tree, noise=noise)
        corr = sum(np.prod(outcome_signs(o)) * p for o, p in dist.probs.items())
        total += sign * corr
    return total


def test_phase_jitter_degrades_chsh_monotonically():
    # ensemble mean over seeds is non-increasing in the jitter width (3 sigma)
    grid = [0.0, 0.05, 0.1, 0.2]
    n_seeds = 100
    means, errs = [], []
    for sigma in grid:
        vals = [
            chsh_value(NoiseModel(phase_jitter_sigma=sigma, seed=seed))
            for seed in range(n_seeds)
        ]
        means.append(np.mean(vals))
        errs.append(np.std(vals, ddof=1) / np.sqrt(n_seeds))
    for k in range(len(grid) - 1):
        slack = 3.0 * np.hypot(errs[k], errs[k + 1])
        assert means[k + 1] <= means[k] + slack, (grid, means, errs)


# ------------------------------------------------------------ text + CSV


def test_netlist_text_roundtrip():
    tree = build_sequence_tree(
        [pauli_observable("ZI"), pauli_observable("IX")], prep="chsh"
    )
    text = tree.netlist.to_text(comment="chsh ZI,IX tree")
    back = Netlist.from_text(text)
    back.validate()
    assert back.to_text(comment="chsh ZI,IX tree") == text
    d1 = port_distribution(
        propagate(tree.netlist, {"prep.src": 1.0}), tree.leaf_groups
    )
    d2 = port_distribution(propagate(back, {"prep.src": 1.0}), tree.leaf_groups)
    assert d1.probs == d2.probs
    # noise keying follows element order, which the text format preserves
    nm = NoiseModel(phase_jitter_sigma=0.1, seed=9)
    n1 = port_distribution(propagate(tree.netlist, {"prep.src": 1.0}, nm), tree.leaf_groups)
    n2 = port_distribution(propagate(back, {"prep.src": 1.0}, nm), tree.leaf_groups)
    assert n1.probs == n2.probs


def test_netlist_text_errors():
    with pytest.raises(NetlistError):
        Netlist.from_text("warp a b\n")
    with pytest.raises(NetlistError):
        Netlist.from_text("phase_segment a b notafloat\n")


def test_leaf_csv_format():
    tree = build_sequence_tree([pauli_observable("ZI"), pauli_observable("IZ")], prep="chsh")
    dist = tree_distribution(tree)
    csv = leaf_distribution_csv(dist)
    lines = csv.strip().split("\n")
    assert lines[0] == "outcome_string,probability,intensity"
    assert len(lines) == 1 + 4
    first = lines[1].split(",")
    assert first[0] == "++"
    assert float(first[1]) == pytest.approx(dist.prob("++"))
