#!/usr/bin/env python3
"""
End-to-end tests for the uepframe command line in main.py.

Every subcommand is driven through run() with in-memory stdin/stdout, and
the exit code plus the JSON document written to stdout are checked.

Run: python tests/test_main.py
"""

import io
import json
import sys
import tempfile
import unittest
from pathlib import Path

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from isotypical import Mask, PartitionOfUnityError
from laurent import LaurentPoly
from main import EXIT_FAILED, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, exit_code_for, run
from sdp_frame import StalledError
from serialization import FormatError, mask_to_json


def invoke(argv, document=None):
    """Run the CLI, feeding ``document`` as JSON on stdin; returns (exit code, parsed stdout)."""
    out = io.StringIO()
    stdin = io.StringIO(json.dumps(document)) if document is not None else None
    code = run(argv, stdout=out, stdin=stdin)
    text = out.getvalue()
    return code, json.loads(text) if text.strip() else None


def mask_document(name, params=None):
    """The JSON document printed by 'catalog show'."""
    argv = ["catalog", "show", name]
    for key, value in (params or {}).items():
        argv += ["--param", f"{key}={value}"]
    code, document = invoke(argv)
    assert code == EXIT_OK, document
    return document


def haar_document():
    """(1 + z)/2 under M = 2."""
    return mask_to_json(Mask.from_matrix([[2]], LaurentPoly(1, [[0], [1]], [0.5, 0.5]), name="haar"))


class TestCatalogCommand(unittest.TestCase):
    """Test 'catalog list' and 'catalog show'."""

    def test_list(self):
        """Test every built-in mask is listed with its matrix."""
        code, entries = invoke(["catalog", "list"])
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(len(entries), 7)
        self.assertIn({"name": "daubechies4", "dim": 1, "M": [[2]], "param": None,
                       "origin": "orthonormal Daubechies symbol with two vanishing moments"}, entries)

    def test_show(self):
        """Test a mask document carries its version, matrix and parameters."""
        document = mask_document("interp3d", {"lambda": "1/32"})
        self.assertEqual(document["version"], "uepframe/1")
        self.assertEqual(document["kind"], "mask")
        self.assertEqual(document["M"], [[2, 0, 0], [0, 2, 0], [0, 0, 2]])
        self.assertEqual(document["meta"]["params"], {"lambda": 0.03125})

    def test_unknown_mask(self):
        """Test an unknown name exits 3 with an error document."""
        with self.assertLogs("main", level="ERROR"):
            code, document = invoke(["catalog", "show", "loop"])
        self.assertEqual(code, EXIT_INPUT)
        self.assertEqual(document["kind"], "CatalogError")
        self.assertIn("loop", document["error"])

    def test_malformed_parameter(self):
        """Test a parameter without '=' is an input error."""
        code, document = invoke(["catalog", "show", "interp3d", "--param", "lambda"])
        self.assertEqual(code, EXIT_INPUT)
        self.assertEqual(document["kind"], "FormatError")


class TestUsage(unittest.TestCase):
    """Test argument parsing outcomes."""

    def test_unknown_command(self):
        """Test a usage error exits 3 without a document."""
        self.assertEqual(invoke(["bogus"])[0], EXIT_INPUT)

    def test_missing_subcommand(self):
        """Test 'construct' without a method is a usage error."""
        self.assertEqual(invoke(["construct"])[0], EXIT_INPUT)

    def test_invalid_json(self):
        """Test unparsable stdin exits 3."""
        out = io.StringIO()
        code = run(["sumrules", "-"], stdout=out, stdin=io.StringIO("{not json"))
        self.assertEqual(code, EXIT_INPUT)
        self.assertEqual(json.loads(out.getvalue())["kind"], "FormatError")

    def test_polynomial_terms(self):
        """Test coefficients are written as exp/re/im objects in lexicographic order."""
        document = mask_document("daubechies4")
        self.assertEqual(document["dim"], 1)
        terms = document["coefficients"]
        self.assertEqual([t["exp"] for t in terms], [[0], [1], [2], [3]])
        self.assertEqual(set(terms[0]), {"exp", "re", "im"})
        self.assertAlmostEqual(sum(t["re"] for t in terms), 1.0, places=12)

    def test_polynomial_terms_must_be_objects(self):
        """Test positional term lists and exponents of the wrong length are refused."""
        document = haar_document()
        document["coefficients"] = {"dim": 1, "terms": [[[0], 0.5, 0.0], [[1], 0.5, 0.0]]}
        self.assertEqual(invoke(["sumrules", "-"], document)[0], EXIT_INPUT)
        document["coefficients"] = [{"exp": [0, 0], "re": 0.5, "im": 0.0}]
        self.assertEqual(invoke(["sumrules", "-"], document)[0], EXIT_INPUT)

    def test_wrong_version(self):
        """Test a document from another format version is refused."""
        document = haar_document()
        document["version"] = "uepframe/0"
        self.assertEqual(invoke(["sumrules", "-"], document)[0], EXIT_INPUT)


class TestExitCodes(unittest.TestCase):
    """Test the mapping from exceptions to exit codes."""

    def test_mapping(self):
        """Test infeasibility, input errors and unexpected errors."""
        self.assertEqual(exit_code_for(PartitionOfUnityError("x")), EXIT_INFEASIBLE)
        self.assertEqual(exit_code_for(StalledError("x")), EXIT_INFEASIBLE)
        self.assertEqual(exit_code_for(FormatError("x")), EXIT_INPUT)
        self.assertEqual(exit_code_for(ValueError("x")), EXIT_INPUT)
        self.assertIsNone(exit_code_for(KeyError("x")))


class TestChecks(unittest.TestCase):
    """Test 'subqmf', 'sumrules' and 'analyze'."""

    def test_subqmf_box_spline(self):
        """Test the box spline passes with minimum 0."""
        code, result = invoke(["subqmf", "-", "--grid", "8"], mask_document("boxspline111"))
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(result["passed"])
        self.assertAlmostEqual(result["minValue"], 0.0, places=12)

    def test_subqmf_negative(self):
        """Test f < 0 exits 1."""
        mask = Mask.from_matrix([[2]], LaurentPoly(1, [[0], [1]], [0.6, 0.6]), unnormalized=True)
        code, result = invoke(["subqmf", "-", "--grid", "8"], mask_to_json(mask))
        self.assertEqual(code, EXIT_FAILED)
        self.assertFalse(result["passed"])

    def test_subqmf_grid_checked(self):
        """Test a one-point grid is an input error."""
        code, _ = invoke(["subqmf", "-", "--grid", "1"], haar_document())
        self.assertEqual(code, EXIT_INPUT)

    def test_sumrules(self):
        """Test the Daubechies lowpass has order 2."""
        code, result = invoke(["sumrules", "-"], mask_document("daubechies4"))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(result["order"], 2)

    def test_analyze_box_spline(self):
        """Test the box spline verdict and the CSV sample."""
        with tempfile.TemporaryDirectory() as tmp:
            csv_path = Path(tmp) / "f.csv"
            code, result = invoke(["analyze", "-", "--grid", "16", "--plot", str(csv_path)],
                                  mask_document("boxspline111"))
            self.assertTrue(csv_path.exists())
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(result["verdict"], "SUFFICIENT_HOLDS")
        self.assertEqual(len(result["zeros"]), 4)
        self.assertEqual(result["plot"], str(csv_path))

    def test_analyze_counterexample(self):
        """Test a violated sub-QMF condition exits 1."""
        code, result = invoke(["analyze", "-"], mask_document("nosubqmf3d"))
        self.assertEqual(code, EXIT_FAILED)
        self.assertEqual(result["verdict"], "NECESSARY_VIOLATED")


class TestConstructCommand(unittest.TestCase):
    """Test 'construct sos', 'construct sdp' and 'verify' on their output."""

    def test_sos_box_spline_then_verify(self):
        """Test the box spline frame is built, reported and re-verified from its own output."""
        code, frame = invoke(["construct", "sos", "-", "--cert", "boxspline111"], mask_document("boxspline111"))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(frame["kind"], "frame")
        self.assertEqual(len(frame["generators"]), 7)
        self.assertTrue(frame["report"]["passed"])
        self.assertEqual(frame["mask"]["meta"]["construction"],
                         {"method": "sos", "certificate": "boxspline111", "terms": 3})

        code, result = invoke(["verify", "-"], frame)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(result["generators"], 7)
        self.assertTrue(result["report"]["passed"])

    def test_verify_detects_tampering(self):
        """Test halving one generator makes 'verify' exit 1."""
        _, frame = invoke(["construct", "sos", "-", "--cert", "boxspline111"], mask_document("boxspline111"))
        for term in frame["generators"][0]:
            term["re"] *= 0.5
            term["im"] *= 0.5
        code, result = invoke(["verify", "-"], frame)
        self.assertEqual(code, EXIT_FAILED)
        self.assertFalse(result["report"]["passed"])

    def test_sos_parameters_from_mask(self):
        """Test the certificate takes lambda from the mask document."""
        document = mask_document("interp3d", {"lambda": "1/16"})
        code, frame = invoke(["construct", "sos", "-", "--cert", "interp3d"], document)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(frame["mask"]["meta"]["construction"]["terms"], 29)

    def test_sos_wrong_certificate(self):
        """Test a certificate for another mask exits 3."""
        code, result = invoke(["construct", "sos", "-", "--cert", "boxspline111"], mask_document("butterfly"))
        self.assertEqual(code, EXIT_INPUT)
        self.assertEqual(result["kind"], "CertificateError")

    def test_sos_missing_certificate_file(self):
        """Test a certificate that is neither built in nor a file exits 3."""
        code, _ = invoke(["construct", "sos", "-", "--cert", "/nonexistent/cert.json"], haar_document())
        self.assertEqual(code, EXIT_INPUT)

    def test_sdp_haar(self):
        """Test the Haar lowpass gives one generator."""
        code, frame = invoke(["construct", "sdp", "-"], haar_document())
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(len(frame["generators"]), 1)
        self.assertEqual(frame["mask"]["meta"]["construction"], {"method": "sdp", "supportPoints": 2})

    def test_sdp_daubechies(self):
        """Test the catalog Daubechies mask piped into 'construct sdp' gives a verified frame."""
        code, frame = invoke(["construct", "sdp", "-"], mask_document("daubechies4"))
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(frame["report"]["passed"])
        self.assertLessEqual(len(frame["generators"]), 6)

    def test_sdp_box_support(self):
        """Test an explicit box support and a malformed one."""
        self.assertEqual(invoke(["construct", "sdp", "-", "--support", "box:0,1"], haar_document())[0], EXIT_OK)
        self.assertEqual(invoke(["construct", "sdp", "-", "--support", "disk:3"], haar_document())[0],
                         EXIT_INPUT)

    def test_sdp_partition_of_unity(self):
        """Test a mask without the partition of unity exits 2."""
        mask = Mask.from_matrix([[2]], LaurentPoly(1, [[0], [1], [2]], [1 / 3, 1 / 3, 1 / 3]))
        code, result = invoke(["construct", "sdp", "-"], mask_to_json(mask))
        self.assertEqual(code, EXIT_INFEASIBLE)
        self.assertEqual(result["kind"], "PartitionOfUnityError")

    def test_sdp_stalled(self):
        """Test an iteration cap too small to converge exits 2."""
        code, result = invoke(["construct", "sdp", "-", "--max-iter", "1", "--no-polish"], mask_document("daubechies4"))
        self.assertEqual(code, EXIT_INFEASIBLE)
        self.assertEqual(result["kind"], "StalledError")


if __name__ == "__main__":
    unittest.main()
