#!/usr/bin/env python3
"""
Tests for the semidefinite route to frame generators in sdp_frame.py.

The four-tap Daubechies lowpass is the worked example: its seed matrix is
indefinite, and one admissible correction makes it a rank-one PSD matrix whose
factor is the Daubechies highpass.

Run: python tests/test_sdp_frame.py
"""

import sys
import unittest
from pathlib import Path

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from catalog import get
from isotypical import Mask, PartitionOfUnityError
from laurent import DimensionMismatchError, LaurentPoly, distance, sin_poly
from sdp_frame import (
    FEASIBLE,
    STALLED,
    EigenSolverError,
    GramProblemError,
    SolveOptions,
    StalledError,
    SupportSet,
    build_gram_seed,
    build_sos_gram,
    construct_frame_sdp,
    factor_psd,
    gram_sos_certificate,
    min_eigenvalue,
    polish_low_rank,
    project_affine,
    project_psd,
    solve_feasibility,
)
from verify import canonicalize_generator, check_uep

R3 = np.sqrt(3.0)

# Seed of the Daubechies example over the support {0, 1, 2, 3}
DAUBECHIES_R = np.array([
    [4 + 6 * R3, -6 - 4 * R3, -2 * R3, 2],
    [-6 - 4 * R3, 12 + 2 * R3, -6, 2 * R3],
    [-2 * R3, -6, 12 - 2 * R3, -6 + 4 * R3],
    [2, 2 * R3, -6 + 4 * R3, 4 - 6 * R3],
]) / 64.0

# An admissible correction making R + O rank one
DAUBECHIES_O = np.array([
    [-8 * R3, 8 * R3, 0, 0],
    [8 * R3, -8 * R3, 0, 0],
    [0, 0, 8 * R3, -8 * R3],
    [0, 0, -8 * R3, 8 * R3],
]) / 64.0

DAUBECHIES_Q = LaurentPoly(1, [[0], [1], [2], [3]],
                           np.array([1 - R3, -3 + R3, 3 + R3, -1 - R3]) / 8.0)


def haar_mask():
    """(1 + z)/2 under M = 2."""
    return Mask.from_matrix([[2]], LaurentPoly(1, [[0], [1]], [0.5, 0.5]), name="haar")


class TestSupportSet(unittest.TestCase):
    """Test the ordered exponent sets."""

    def test_sorted(self):
        """Test points are stored lexicographically."""
        support = SupportSet(((1, 0), (0, 2), (0, -1)))
        self.assertEqual(support.points, ((0, -1), (0, 2), (1, 0)))
        self.assertEqual(support.index_of((1, 0)), 2)
        with self.assertRaises(KeyError):
            support.index_of((5, 5))

    def test_invalid_sets(self):
        """Test empty, duplicated and ragged point sets are refused."""
        with self.assertRaises(ValueError):
            SupportSet(())
        with self.assertRaises(ValueError):
            SupportSet(((0,), (0,)))
        with self.assertRaises(DimensionMismatchError):
            SupportSet(((0,), (0, 1)))

    def test_box_and_dilation(self):
        """Test box corners are inclusive and dilation grows the bounding box."""
        box = SupportSet.box((0, -1), (2, 1))
        self.assertEqual(len(box), 9)
        self.assertEqual(len(SupportSet(((0,), (3,))).dilated(1)), 6)
        with self.assertRaises(ValueError):
            SupportSet.box((1,), (0,))

    def test_coefficient_row(self):
        """Test coefficients follow the support order and leaks are refused."""
        support = SupportSet(((0,), (1,), (2,)))
        row = support.coefficient_row(LaurentPoly(1, [[2], [0]], [3.0, 1.0]))
        np.testing.assert_array_equal(row, [1.0, 0.0, 3.0])
        with self.assertRaises(GramProblemError):
            support.coefficient_row(LaurentPoly.monomial((4,)))


class TestDaubechiesSeed(unittest.TestCase):
    """Test the seed matrix and constraint groups of the Daubechies example."""

    def setUp(self):
        """Build the problem over the mask support."""
        self.mask = get("daubechies4")
        self.prob = build_gram_seed(self.mask)

    def test_seed_matrix(self):
        """Test R = diag(p) - p p^T."""
        self.assertTrue(self.prob.is_real)
        np.testing.assert_allclose(self.prob.R, DAUBECHIES_R, atol=1e-14)

    def test_seed_is_indefinite(self):
        """Test R is not positive semidefinite."""
        self.assertLess(min_eigenvalue(self.prob.R), -1e-3)

    def test_groups(self):
        """Test 6 lags per class and the group (class 0, lag 0) = {(0, 0), (2, 2)}."""
        self.assertEqual(len(self.prob.group_keys), 12)
        self.assertEqual(int(self.prob.group_counts.sum()), 16)
        g = self.prob.group_keys.index((0, 0))
        self.assertEqual(self.prob.groups()[g].tolist(), [[0, 0], [2, 2]])

    def test_correction_is_admissible(self):
        """Test R + O meets every group sum and is a fixed point of the affine projection."""
        S = DAUBECHIES_R + DAUBECHIES_O
        self.assertLess(self.prob.deviation(S), 1e-14)
        np.testing.assert_allclose(project_affine(S, self.prob), S, atol=1e-12)
        self.assertGreater(min_eigenvalue(S), -1e-12)

    def test_factor_gives_highpass(self):
        """Test R + O has rank one and its factor is the Daubechies highpass."""
        rows = factor_psd(DAUBECHIES_R + DAUBECHIES_O)
        self.assertEqual(len(rows), 1)
        q = LaurentPoly(1, self.prob.support.as_array(), rows[0])
        self.assertLess(distance(canonicalize_generator(q), canonicalize_generator(DAUBECHIES_Q)), 1e-12)

    def test_shape_checked(self):
        """Test the affine projection refuses a matrix of the wrong size."""
        with self.assertRaises(DimensionMismatchError):
            project_affine(np.zeros((3, 3)), self.prob)


class TestProjections(unittest.TestCase):
    """Test the two projections."""

    def setUp(self):
        """A seeded generator and the Daubechies problem."""
        self.rng = np.random.default_rng(17)
        self.prob = build_gram_seed(get("daubechies4"))

    def _random_symmetric(self, n):
        """Random real symmetric matrix."""
        X = self.rng.normal(size=(n, n))
        return X + X.T

    def test_psd_projection(self):
        """Test the PSD projection is idempotent, lands in the cone and clips only negative parts."""
        for _ in range(20):
            X = self._random_symmetric(5)
            P = project_psd(X)
            self.assertGreater(min_eigenvalue(P), -1e-10)
            np.testing.assert_allclose(project_psd(P), P, atol=1e-10)
            w = np.linalg.eigvalsh(X)
            self.assertAlmostEqual(np.linalg.norm(P - X), np.sqrt(np.sum(w[w < 0] ** 2)), places=10)

    def test_psd_projection_of_seed(self):
        """Test the distance from R to the cone is the size of its negative spectrum."""
        w = np.linalg.eigvalsh(DAUBECHIES_R)
        moved = np.linalg.norm(project_psd(DAUBECHIES_R) - DAUBECHIES_R)
        self.assertAlmostEqual(moved, np.sqrt(np.sum(w[w < 0] ** 2)), places=12)

    def test_affine_projection_is_idempotent(self):
        """Test P(P(X)) = P(X) and P(X) meets the constraints."""
        for _ in range(20):
            X = self._random_symmetric(4)
            P = project_affine(X, self.prob)
            self.assertLess(self.prob.deviation(P), 1e-12)
            np.testing.assert_allclose(project_affine(P, self.prob), P, atol=1e-12)
            np.testing.assert_allclose(P, P.T, atol=1e-12)

    def test_affine_projection_is_orthogonal(self):
        """Test the linear part of the projection is self-adjoint."""
        zero = project_affine(np.zeros((4, 4)), self.prob)
        for _ in range(20):
            X = self.rng.normal(size=(4, 4))
            Y = self.rng.normal(size=(4, 4))
            LX = project_affine(X, self.prob) - zero
            LY = project_affine(Y, self.prob) - zero
            self.assertAlmostEqual(np.sum(LX * Y), np.sum(X * LY), places=10)

    def test_non_finite_input(self):
        """Test a matrix with NaN entries raises EigenSolverError."""
        X = np.eye(3)
        X[0, 1] = X[1, 0] = np.nan
        with self.assertRaises(EigenSolverError):
            project_psd(X)


class TestSolver(unittest.TestCase):
    """Test the Dykstra feasibility search."""

    def test_options_validated(self):
        """Test nonpositive options are refused."""
        with self.assertRaises(ValueError):
            SolveOptions(max_iterations=0)
        with self.assertRaises(ValueError):
            SolveOptions(residual_tol=-1.0)

    def test_feasible_seed_stops_at_once(self):
        """Test a PSD seed is accepted in one iteration."""
        result = solve_feasibility(build_gram_seed(haar_mask()))
        self.assertEqual(result.status, FEASIBLE)
        self.assertTrue(result.feasible)
        self.assertEqual(result.iterations, 1)
        self.assertEqual(len(result.residual_trace), 1)

    def test_distance_to_known_solution_shrinks(self):
        """Test the iterates end closer to a known feasible point than the seed."""
        prob = build_gram_seed(get("daubechies4"))
        reference = DAUBECHIES_R + DAUBECHIES_O
        result = solve_feasibility(prob, SolveOptions(max_iterations=2000, polish=False), reference=reference)
        self.assertEqual(len(result.distance_trace), result.iterations + 1)
        self.assertLess(result.distance_trace[-1], result.distance_trace[0])
        self.assertLess(min(result.residual_trace), result.residual_trace[0])

    def test_iteration_cap_reports_stall(self):
        """Test hitting the iteration cap returns the stalled status."""
        prob = build_gram_seed(get("daubechies4"))
        result = solve_feasibility(prob, SolveOptions(max_iterations=3, polish=False))
        self.assertEqual(result.status, STALLED)
        self.assertEqual(result.iterations, 3)


class TestPolish(unittest.TestCase):
    """Test the low-rank refinement of stalled iterates."""

    def setUp(self):
        """The Daubechies problem and its only feasible point."""
        self.prob = build_gram_seed(get("daubechies4"))
        self.solution = DAUBECHIES_R + DAUBECHIES_O

    def test_recovers_perturbed_solution(self):
        """Test a perturbed copy of the feasible point is pulled back onto it."""
        rng = np.random.default_rng(5)
        noise = rng.normal(size=(4, 4))
        S = polish_low_rank(self.prob, self.solution + 1e-3 * (noise + noise.T))
        self.assertIsNotNone(S)
        self.assertLess(self.prob.deviation(S), 1e-10)
        np.testing.assert_allclose(S, self.solution, atol=1e-7)

    def test_solver_finishes_with_refinement(self):
        """Test Dykstra plus refinement reaches the feasible point of the tangential problem."""
        result = solve_feasibility(self.prob)
        self.assertTrue(result.feasible)
        self.assertTrue(result.polished)
        self.assertGreater(min_eigenvalue(result.S), -1e-12)
        np.testing.assert_allclose(result.S, self.solution, atol=1e-7)

    def test_negative_definite_input(self):
        """Test a matrix without positive spectrum gives nothing to refine."""
        self.assertIsNone(polish_low_rank(self.prob, -np.eye(4)))


class TestConstruction(unittest.TestCase):
    """Test frames from the semidefinite route."""

    def test_haar(self):
        """Test the Haar lowpass gives the Haar highpass."""
        frame = construct_frame_sdp(haar_mask())
        self.assertEqual(len(frame), 1)
        expected = LaurentPoly(1, [[0], [1]], [0.5, -0.5])
        self.assertLess(distance(canonicalize_generator(frame.generators[0]), expected), 1e-12)

    def test_daubechies(self):
        """Test the Daubechies lowpass gives a verified frame with few generators."""
        frame = construct_frame_sdp(get("daubechies4"))
        self.assertTrue(check_uep(frame, 1e-8).passed)
        self.assertLessEqual(len(frame), 6)

    def test_box_spline(self):
        """Test the bivariate box spline gets a frame from the default support."""
        frame = construct_frame_sdp(get("boxspline111"))
        self.assertTrue(check_uep(frame, 1e-8).passed)
        self.assertLessEqual(check_uep(frame, 1e-8).vanishing_moment_max, 1e-8)
        self.assertGreaterEqual(len(frame), 4)

    def test_stall_raises(self):
        """Test a search that never converges raises StalledError after the retry."""
        with self.assertRaises(StalledError):
            construct_frame_sdp(get("daubechies4"), opts=SolveOptions(max_iterations=1, polish=False))

    def test_partition_of_unity_required(self):
        """Test p = 1 is refused before any solve."""
        mask = Mask.from_matrix([[2]], LaurentPoly.constant(1, 1.0))
        with self.assertRaises(PartitionOfUnityError):
            construct_frame_sdp(mask)


class TestGramSos(unittest.TestCase):
    """Test the plain Gram sum-of-squares problem."""

    def test_sine_square(self):
        """Test sin^2 is recovered as a single square over {-1, 1}."""
        s = sin_poly((1,))
        target = s.involution() * s
        cert = gram_sos_certificate(target, SupportSet(((-1,), (1,))))
        self.assertEqual(len(cert), 1)
        self.assertLess(distance(cert.sum_of_squares(1), target), 1e-12)

    def test_non_hermitian_target(self):
        """Test a non-hermitian target is refused."""
        with self.assertRaises(GramProblemError):
            build_sos_gram(LaurentPoly.monomial((1,)), SupportSet(((0,), (1,))))

    def test_unreachable_lag(self):
        """Test a target lag that no pair of support points realizes is refused."""
        target = LaurentPoly(1, [[-3], [0], [3]], [0.25, 1.0, 0.25])
        with self.assertRaises(GramProblemError):
            build_sos_gram(target, SupportSet(((0,), (1,))))


if __name__ == "__main__":
    unittest.main()
