import math

import numpy as np
import pytest

from qcx.errors import AssumptionViolatedError, RankDeficientError
from qcx.l2basis import (BlockStructure, blocks_from_generators,
                         build_example_10pt, build_example_10pt_split,
                         check_basis_locality, check_cone_self_dual,
                         check_convexity_wrt_preorder, check_nqc_wrt_preorder,
                         cone_leq, gram_schmidt, load_block_structure,
                         project_G_complement, refined_partition_10pt,
                         save_basis_matrix)
from qcx.riskmeasure import (FiniteProbSpace, PartitionSigma,
                             RiskMeasureOracle, check_locality,
                             check_natural_quasiconvexity,
                             conditional_expectation,
                             conditional_expectation_map,
                             entropic_certainty_equivalent, mean_broadcast_map,
                             neg_conditional_expectation, sample_triples,
                             sqrt_log_map)


@pytest.fixture(scope="module")
def block():
    return build_example_10pt()


@pytest.fixture(scope="module")
def triples(block):
    return sample_triples(block.space, 11, 150)


class TestGramSchmidt:
    def test_two_point_example(self):
        space = FiniteProbSpace.uniform(2)
        out = gram_schmidt([np.array([1.0, 1.0]), np.array([1.0, 0.0])], space)
        np.testing.assert_allclose(out[0], [1.0, 1.0])
        np.testing.assert_allclose(np.abs(out[1]), [1.0, 1.0])
        assert out[1][0] * out[1][1] < 0  # the (1, -1) direction
        assert abs(space.inner(out[0], out[1])) <= 1e-12

    def test_orthonormal_input_unchanged(self):
        space = FiniteProbSpace.uniform(4)
        v1 = np.array([1.0, 1.0, -1.0, -1.0])
        v2 = np.array([1.0, -1.0, 1.0, -1.0])
        out = gram_schmidt([v1, v2], space)
        np.testing.assert_allclose(out[0], v1, atol=1e-12)
        np.testing.assert_allclose(out[1], v2, atol=1e-12)

    def test_ten_point_generators(self):
        space = FiniteProbSpace.uniform(10)
        b1 = np.array([1, 1, -1, -1, 0, 0, 0, 0, 0, 0], dtype=float)
        b2 = np.array([1, -1, 1, -1, 0, 0, 0, 0, 0, 0], dtype=float)
        out = gram_schmidt([b1, b2], space)
        # uniform weights: ||b|| = sqrt(0.4), normalization factor sqrt(10)/2
        np.testing.assert_allclose(out[0], b1 * math.sqrt(10) / 2)
        np.testing.assert_allclose(out[1], b2 * math.sqrt(10) / 2)
        assert abs(space.inner(out[0], out[1])) <= 1e-12

    def test_rank_deficient(self):
        space = FiniteProbSpace.uniform(3)
        with pytest.raises(RankDeficientError) as exc:
            gram_schmidt([np.array([1.0, 0.0, 0.0]),
                          np.array([2.0, 0.0, 0.0])], space)
        assert exc.value.index == 1

    def test_transform_reconstructs(self):
        space = FiniteProbSpace.uniform(4)
        gens = [np.array([1.0, 1.0, 1.0, 1.0]), np.array([1.0, 2.0, 3.0, 4.0])]
        out, t = gram_schmidt(gens, space, return_transform=True)
        for i, o in enumerate(out):
            recon = sum(t[i, j] * gens[j] for j in range(len(gens)))
            np.testing.assert_allclose(o, recon, atol=1e-12)


class TestExampleStructure:
    def test_dimensions(self, block):
        assert block.e_dims() == (1, 1, 1)
        assert tuple(len(b) for b in block.beta_blocks) == (3, 2, 2)
        assert len(block.all_vectors()) == 10

    def test_e_vectors_are_normalized_indicators(self, block):
        e1 = block.e_blocks[0][0]
        want = np.zeros(10)
        want[:4] = 1.0 / math.sqrt(0.4)
        np.testing.assert_allclose(e1, want)

    def test_orthonormality_residual(self, block):
        vecs = block.all_vectors()
        gram = np.array([[block.space.inner(a, b) for b in vecs] for a in vecs])
        assert np.abs(gram - np.eye(10)).max() < 1e-12

    def test_pythagoras(self, block):
        rng = np.random.default_rng(0)
        for _ in range(100):
            x = rng.normal(size=10)
            coeffs = block.coordinates(x)
            assert abs(block.space.inner(x, x) - np.sum(coeffs ** 2)) < 1e-10

    def test_transform_recorded(self, block):
        assert block.transforms is not None
        assert block.transforms[0].shape == (4, 4)

    def test_structure_validation(self):
        space = FiniteProbSpace.uniform(4)
        good = blocks_from_generators(
            space, [(0, 1), (2, 3)],
            [[np.array([1.0, 1.0, 0, 0])], [np.array([0, 0, 1.0, 1.0])]],
            [[], []], complete=True)
        assert good.e_dims() == (1, 1)
        with pytest.raises(ValueError):
            BlockStructure(space, ((0, 1), (2, 3)),
                           good.e_blocks, (good.beta_blocks[0], ()))


class TestProjection:
    def test_measurable_maps_to_zero(self, block):
        sigma = block.sigma()
        x = sigma.from_atom_values([1.0, -2.0, 0.5])
        got = project_G_complement(x, sigma, block.space)
        np.testing.assert_allclose(got, np.zeros(10), atol=1e-12)

    def test_two_point_trivial(self):
        space = FiniteProbSpace.uniform(2)
        got = project_G_complement(np.array([1.0, -1.0]),
                                   PartitionSigma.trivial(2), space)
        np.testing.assert_allclose(got, [1.0, -1.0])

    def test_ten_point_pattern(self, block):
        x = np.arange(1.0, 11.0)
        got = project_G_complement(x, block.sigma(), block.space)
        want = x - np.array([2.5] * 4 + [6.0] * 3 + [9.0] * 3)
        np.testing.assert_allclose(got, want, atol=1e-12)
        for e in (v for eb in block.e_blocks for v in eb):
            assert abs(block.space.inner(got, e)) < 1e-12


class TestBasisLocality:
    def test_condexp_passes(self, block):
        rho = neg_conditional_expectation(block.sigma(), block.space)
        assert check_basis_locality(rho, block, budget=120).passed

    def test_mean_broadcast_fails(self, block):
        rho = mean_broadcast_map(block.sigma(), block.space)
        rep = check_basis_locality(rho, block, budget=120)
        assert rep.failed
        assert rep.witness["violation"] > rep.tol

    def test_e_coordinate_projection_map_passes(self, block):
        es = [e[0] for e in block.e_blocks]

        def fn(x):
            return -sum(block.space.inner(x, e) * e for e in es)

        rho = RiskMeasureOracle("neg-e-projection", fn, block.sigma(),
                                block.space)
        assert check_basis_locality(rho, block, budget=120).passed

    def test_classical_implies_basis_locality(self, block):
        for make in (neg_conditional_expectation, entropic_certainty_equivalent,
                     sqrt_log_map):
            rho = make(block.sigma(), block.space)
            assert check_locality(rho, budget=60).passed
            assert check_basis_locality(rho, block, budget=60).passed

    def test_equivalence_when_cells_generate(self, block):
        # G = sigma(cells): the two notions agree on the suite
        for make, local in ((neg_conditional_expectation, True),
                            (mean_broadcast_map, False)):
            rho = make(block.sigma(), block.space)
            assert check_locality(rho, budget=60).passed is local
            assert check_basis_locality(rho, block, budget=60).passed is local


class TestSplitFixture:
    def test_basis_local_but_not_local(self):
        split = build_example_10pt_split()
        refined = refined_partition_10pt()
        rho = conditional_expectation_map(PartitionSigma(split.cells),
                                          split.space, declared_sigma=refined)
        assert split.e_dims() == (2, 1, 1)
        assert check_basis_locality(rho, split, budget=120).passed
        rep = check_locality(rho, budget=120)
        assert rep.failed
        # the violating event lives inside the split cell
        assert set(rep.witness["event_atoms"]) <= {0, 1}

    def test_e_coordinates_require_one_dim(self):
        split = build_example_10pt_split()
        with pytest.raises(AssumptionViolatedError):
            split.e_coordinates(np.zeros(10))


class TestCone:
    def test_cone_leq(self, block):
        rng = np.random.default_rng(1)
        y = rng.normal(size=10)
        e1 = block.e_blocks[0][0]
        assert cone_leq(y, y, block)
        assert cone_leq(y, y + e1, block)
        assert not cone_leq(y, y - e1, block)

    def test_self_dual(self, block):
        assert check_cone_self_dual(block, budget=200).passed


class TestPreorderNQC:
    def test_condexp_and_entropic_pass(self, block, triples):
        for make in (neg_conditional_expectation, entropic_certainty_equivalent):
            rho = make(block.sigma(), block.space)
            rep = check_nqc_wrt_preorder(rho, block, triples=triples)
            assert rep.passed
            assert rep.details["convexity_wrt_preorder"] == "pass"
            assert rep.details["implication_holds"]

    def test_sqrt_log_fails_with_witness(self, block, triples):
        rho = sqrt_log_map(block.sigma(), block.space)
        rep = check_nqc_wrt_preorder(rho, block, triples=triples)
        assert rep.failed
        assert "certificate" in rep.witness

    def test_matches_atom_value_checker(self, block, triples):
        """Normalized-indicator e-blocks reduce the preorder to atom order."""
        for make in (neg_conditional_expectation, sqrt_log_map,
                     entropic_certainty_equivalent):
            rho = make(block.sigma(), block.space)
            a = check_natural_quasiconvexity(rho, triples=triples)
            b = check_nqc_wrt_preorder(rho, block, triples=triples)
            assert a.verdict == b.verdict

    def test_convexity_wrt_preorder(self, block, triples):
        rho = sqrt_log_map(block.sigma(), block.space)
        assert check_convexity_wrt_preorder(rho, block, triples=triples).failed

    def test_requires_one_dim_blocks(self, triples):
        split = build_example_10pt_split()
        rho = neg_conditional_expectation(refined_partition_10pt(), split.space)
        with pytest.raises(AssumptionViolatedError):
            check_nqc_wrt_preorder(rho, split, triples=triples)


class TestStructureIO:
    def test_roundtrip(self, tmp_path, block):
        path = tmp_path / "structure.txt"
        path.write_text(
            "cells: 1-4; 5-7; 8-10\n"
            "e 1: 1 1 1 1 0 0 0 0 0 0\n"
            "beta 1: 1 1 -1 -1 0 0 0 0 0 0\n"
            "beta 1: 1 -1 1 -1 0 0 0 0 0 0\n"
            "beta 1: -1 0 0 -1 0 0 0 0 0 0\n"
            "e 2: 0 0 0 0 1 1 1 0 0 0\n"
            "e 3: 0 0 0 0 0 0 0 1 1 1\n")
        loaded = load_block_structure(path)
        assert loaded.e_dims() == (1, 1, 1)
        np.testing.assert_allclose(loaded.e_blocks[0][0],
                                   block.e_blocks[0][0])
        out = tmp_path / "basis.txt"
        save_basis_matrix(out, loaded)
        mat = np.loadtxt(out)
        assert mat.shape == (10, 10)
        p = loaded.space.p
        gram = (mat * p) @ mat.T
        assert np.abs(gram - np.eye(10)).max() < 1e-12

    def test_missing_cells_line(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("e 1: 1 0\n")
        with pytest.raises(ValueError):
            load_block_structure(path)

    def test_out_of_range_cell_reference(self, tmp_path):
        path = tmp_path / "bad2.txt"
        path.write_text("cells: 1-2; 3-4\ne 3: 1 1 1 1\n")
        with pytest.raises(ValueError, match="cell 3"):
            load_block_structure(path)
