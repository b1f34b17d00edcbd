"""Command-line front end.

One command per invocation: check, evd, pseudocirc, svd, signchar, perturb.
Input is a matrix JSON file (or a polynomial JSON file for the palindromic
commands); the result JSON goes to stdout or --out.  --csv exports the
eigenvalue / singular-value curves as theta,branch,value rows, and a PNG
rendering of those curves lands next to the CSV unless --no-plot says
otherwise.

Exit codes: 0 success, 1 for validation problems (bad input, wrong shapes,
structure violations), 2 for numerical failures (aliasing, residuals, fits).
Failures print a machine-readable JSON report on stderr.  Result JSON is
deterministic down to the byte: keys sorted, floats at 17 significant
digits, no timestamps.
"""

import argparse
import math
import numbers
import sys
from dataclasses import dataclass

import numpy as np

from . import laurent as lp
from . import matfun as mf
from .errors import (
    MinusOneEigenvalue,
    NotEigenvector,
    NotHermitian,
    NotPalindromic,
    NotRegular,
    ParahermError,
    ParseError,
    RangeError,
    ShapeError,
)
from .evd import analytic_evd, evd_to_json
from .palindromic import (
    PalindromicPoly,
    sign_characteristics,
    to_para_hermitian,
    unimodular_eigenvalues,
    perturbation_check,
)
from .pseudocirc import pseudo_circulant_decomposition, pc_to_json
from .svd import analytic_svd, svd_to_json

# errors that mean "your input is wrong" (exit 1); every other ParahermError
# is a numerical failure (exit 2)
VALIDATION_ERRORS = (
    ParseError,
    ShapeError,
    RangeError,
    NotPalindromic,
    NotRegular,
    MinusOneEigenvalue,
    NotHermitian,
    NotEigenvector,
)

CSV_NODES = 512


@dataclass
class RunConfig:
    """Everything one invocation needs, already validated."""

    command: str
    input_path: str
    grid: int | None = None
    tol: float = 1e-8
    max_period: int | None = None
    branch_angle: float = 0.0
    abs_singular_values: bool = False
    out: str | None = None
    csv: str | None = None
    no_plot: bool = False

    def validate(self):
        if self.grid is not None and (
            self.grid < 2 or self.grid & (self.grid - 1)
        ):
            raise RangeError(
                f"--grid must be a power of two >= 2, got {self.grid}"
            )
        if not (0.0 < self.tol <= 1e-2):
            raise RangeError(f"--tol must be in (0, 1e-2], got {self.tol}")
        if self.max_period is not None and self.max_period < 1:
            raise RangeError(
                f"--max-period must be at least 1, got {self.max_period}"
            )


# ---------------------------------------------------------------------------
# deterministic JSON
# ---------------------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ParahermError(f"non-finite float {x!r} in result")
    return "%.17g" % x


def _escape(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ord(ch) < 0x20:
            out.append("\\u%04x" % ord(ch))
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def render_json(obj, indent: int = 0) -> str:
    """Hand-rolled serializer so results are byte-stable: sorted keys,
    2-space indent, floats via %.17g (full round-trip precision)."""
    pad = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, numbers.Integral):
        return str(int(obj))
    if isinstance(obj, numbers.Real):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return render_json([float(obj.real), float(obj.imag)], indent)
    if isinstance(obj, str):
        return _escape(obj)
    if isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            return "[]"
        inner = ",\n".join(
            pad + "  " + render_json(v, indent + 1) for v in items
        )
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(
            pad + "  " + _escape(str(k)) + ": " + render_json(obj[k], indent + 1)
            for k in sorted(obj, key=str)
        )
        return "{\n" + inner + "\n" + pad + "}"
    raise ParahermError(f"cannot serialize {type(obj).__name__} to JSON")


# ---------------------------------------------------------------------------
# input parsing
# ---------------------------------------------------------------------------


def _read_json_file(path: str):
    import json

    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"{path} is not valid JSON: {e}") from e


def _cnum(v, where: str) -> complex:
    """A complex number in file form: plain real, or an [re, im] pair."""
    if isinstance(v, numbers.Real) and not isinstance(v, bool):
        return complex(float(v), 0.0)
    if (
        isinstance(v, (list, tuple))
        and len(v) == 2
        and all(isinstance(x, numbers.Real) and not isinstance(x, bool) for x in v)
    ):
        return complex(float(v[0]), float(v[1]))
    raise ParseError(f"{where}: expected a number or [re, im], got {v!r}")


def read_poly(obj) -> PalindromicPoly:
    """{"grade": g, "coeffs": [P_0, ..., P_g]} with dense complex entries."""
    try:
        g = int(obj["grade"])
        coeffs = obj["coeffs"]
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"polynomial JSON needs 'grade' and 'coeffs': {e}") from e
    if not isinstance(coeffs, list) or len(coeffs) != g + 1:
        raise ParseError(
            f"grade {g} needs {g + 1} coefficient matrices, got "
            f"{len(coeffs) if isinstance(coeffs, list) else 'non-list'}"
        )
    mats = []
    for i, rows in enumerate(coeffs):
        if not isinstance(rows, list) or not rows:
            raise ParseError(f"coefficient {i} is not a nonempty matrix")
        mat = []
        for r, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != len(rows):
                raise ParseError(f"coefficient {i} is not square")
            mat.append([_cnum(v, f"P_{i}[{r}]") for v in row])
        mats.append(np.array(mat, dtype=complex))
    return PalindromicPoly(tuple(mats))


# ---------------------------------------------------------------------------
# curve sampling for CSV / plots
# ---------------------------------------------------------------------------


def _diag_curves(D, labels, period: int):
    """Rows (theta, label, value) for the diagonal entries of D over one
    full common period, CSV_NODES nodes."""
    thetas = np.linspace(0.0, 2.0 * np.pi * period, CSV_NODES, endpoint=False)
    rows = []
    series = []
    for i, lab in enumerate(labels):
        vals = np.real(lp.lp_eval_grid(D.entry(i, i), period, CSV_NODES, 0.0))
        series.append((lab, vals))
    for t in range(CSV_NODES):
        for lab, vals in series:
            rows.append((float(thetas[t]), lab, float(vals[t])))
    return rows


def _write_curve_csv(path: str, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("theta,branch,value\n")
        for th, lab, val in rows:
            fh.write(f"{_fmt_float(th)},{lab},{_fmt_float(val)}\n")


def _plot_curves(png_path: str, rows, title: str):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    by_label = {}
    for th, lab, val in rows:
        by_label.setdefault(lab, ([], []))
        by_label[lab][0].append(th)
        by_label[lab][1].append(val)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for lab, (ths, vals) in by_label.items():
        ax.plot(ths, vals, lw=1.2, label=str(lab))
    ax.set_xlabel("theta")
    ax.set_ylabel("value")
    ax.set_title(title)
    if len(by_label) <= 12:
        ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, dpi=110)
    plt.close(fig)


def _write_point_csv(path: str, points):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,re,im,modulus\n")
        for i, z in enumerate(points):
            fh.write(
                f"{i},{_fmt_float(z.real)},{_fmt_float(z.imag)},"
                f"{_fmt_float(abs(z))}\n"
            )


def _plot_points(png_path: str, points, title: str):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    circle = np.exp(1j * np.linspace(0, 2 * np.pi, 400))
    ax.plot(circle.real, circle.imag, "k--", lw=0.8, alpha=0.6)
    ax.scatter(
        [z.real for z in points],
        [z.imag for z in points],
        color="tab:red",
        zorder=3,
    )
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, dpi=110)
    plt.close(fig)


def _png_sibling(csv_path: str) -> str:
    stem = csv_path[:-4] if csv_path.lower().endswith(".csv") else csv_path
    return stem + ".png"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_check(cfg: RunConfig):
    A = mf.mat_from_json(_read_json_file(cfg.input_path))
    rep = mf.is_para_hermitian(A, 1e-10)
    if not rep["ok"]:
        raise NotHermitian(
            f"input is not para-Hermitian (coefficient residual "
            f"{rep['residual']:.3e})",
            residual=rep["residual"],
            grid_residual=rep["grid_residual"],
        )
    result = {
        "para_hermitian": True,
        "residual": rep["residual"],
        "grid_residual": rep["grid_residual"],
    }
    return result, None, None


def _cmd_evd(cfg: RunConfig):
    A = mf.mat_from_json(_read_json_file(cfg.input_path))
    res = analytic_evd(
        A, K=cfg.grid, tol=cfg.tol, max_period=cfg.max_period
    )
    labels = list(range(A.n))
    rows = _diag_curves(res.D, labels, res.N)
    return evd_to_json(res), rows, "eigenvalue curves"


def _cmd_pseudocirc(cfg: RunConfig):
    A = mf.mat_from_json(_read_json_file(cfg.input_path))
    res = pseudo_circulant_decomposition(
        A, K=cfg.grid, tol=cfg.tol, max_period=cfg.max_period
    )
    # curves: pointwise-sorted eigenvalues of each diagonal block
    thetas = np.linspace(0.0, 2.0 * np.pi, CSV_NODES, endpoint=False)
    rows = []
    series = []
    for bi, blk in enumerate(res.blocks):
        tmpl = blk.template
        Bv = mf.eval_uniform(tmpl, 1, CSV_NODES, 0.0)
        ew = np.linalg.eigvalsh((Bv + Bv.conj().transpose(0, 2, 1)) / 2.0)
        for l in range(blk.size):
            series.append((f"b{bi}.{l}", ew[:, l]))
    for t in range(CSV_NODES):
        for lab, vals in series:
            rows.append((float(thetas[t]), lab, float(vals[t])))
    return pc_to_json(res), rows, "block eigenvalue curves"


def _cmd_svd(cfg: RunConfig):
    A = mf.mat_from_json(_read_json_file(cfg.input_path))
    res = analytic_svd(
        A, K=cfg.grid, tol=cfg.tol, max_period=cfg.max_period
    )
    r = min(res.S.m, res.S.n)
    thetas = np.linspace(0.0, 2.0 * np.pi * res.N, CSV_NODES, endpoint=False)
    rows = []
    series = []
    for i in range(r):
        vals = np.real(lp.lp_eval_grid(res.S.entry(i, i), res.N, CSV_NODES, 0.0))
        if cfg.abs_singular_values:
            vals = np.abs(vals)
        series.append((i, vals))
    for t in range(CSV_NODES):
        for lab, vals in series:
            rows.append((float(thetas[t]), lab, float(vals[t])))
    title = (
        "pointwise singular values"
        if cfg.abs_singular_values
        else "signed singular value curves"
    )
    return svd_to_json(res), rows, title


def _cmd_signchar(cfg: RunConfig):
    P = read_poly(_read_json_file(cfg.input_path))
    R = to_para_hermitian(P)
    ev = analytic_evd(R, K=cfg.grid, tol=cfg.tol, max_period=cfg.max_period)
    lams = unimodular_eigenvalues(P, branch_angle=cfg.branch_angle)
    reports = []
    for lam, _mult in lams:
        rep = sign_characteristics(
            P, lam, branch_angle=cfg.branch_angle, evd=ev
        )
        reports.append(
            {
                "lambda": [lam.real, lam.imag],
                "entries": list(rep.entries),
            }
        )
    result = {"reports": reports}
    rows = _diag_curves(ev.D, list(range(P.n)), ev.N)
    return result, rows, "eigenvalue curves of z^{-g/2} P(z)"


def _cmd_perturb(cfg: RunConfig):
    obj = _read_json_file(cfg.input_path)
    if not isinstance(obj, dict) or "poly" not in obj or "perturbation" not in obj:
        raise ParseError(
            "perturb input needs {'poly': ..., 'perturbation': ...} "
            "(optional 'lambda')"
        )
    P = read_poly(obj["poly"])
    dP = read_poly(obj["perturbation"])
    if "lambda" in obj:
        raw = obj["lambda"]
        if (
            isinstance(raw, list)
            and raw
            and all(isinstance(v, list) for v in raw)
        ):
            cluster = [_cnum(v, "lambda") for v in raw]
        else:
            cluster = [_cnum(raw, "lambda")]
        cluster = [(z, 1) for z in cluster]
    else:
        cluster = unimodular_eigenvalues(P, branch_angle=cfg.branch_angle)
        if not cluster:
            raise NotRegular(
                "polynomial has no unimodular eigenvalues to track; pass "
                "'lambda' explicitly"
            )
    rep = perturbation_check(P, dP, cluster, tol=cfg.tol)
    result = {
        "moved_off_circle": rep["moved_off_circle"],
        "max_off_circle": rep["max_off_circle"],
        "new_eigenvalues": [[z.real, z.imag] for z in rep["new_eigenvalues"]],
    }
    return result, rep["new_eigenvalues"], "perturbed eigenvalues"


COMMANDS = {
    "check": _cmd_check,
    "evd": _cmd_evd,
    "pseudocirc": _cmd_pseudocirc,
    "svd": _cmd_svd,
    "signchar": _cmd_signchar,
    "perturb": _cmd_perturb,
}


def run(cfg: RunConfig) -> int:
    cfg.validate()
    result, curves, title = COMMANDS[cfg.command](cfg)
    text = render_json(result) + "\n"
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.csv and curves is not None:
        if cfg.command == "perturb":
            _write_point_csv(cfg.csv, curves)
            if not cfg.no_plot:
                _plot_points(_png_sibling(cfg.csv), curves, title)
        else:
            _write_curve_csv(cfg.csv, curves)
            if not cfg.no_plot:
                _plot_curves(_png_sibling(cfg.csv), curves, title)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # argparse exits with its own code 2 on bad flags; route through the
    # package's error reporting instead so flag mistakes are exit 1
    def error(self, message):
        raise ParseError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="paraherm",
        description=(
            "Analytic decompositions of para-Hermitian matrix functions "
            "on the unit circle, and sign characteristics of *-palindromic "
            "matrix polynomials."
        ),
    )
    sub = p.add_subparsers(dest="command", required=True)
    specs = {
        "check": "verify a matrix file is para-Hermitian",
        "evd": "analytic eigendecomposition A = U D U^P",
        "pseudocirc": "pseudo-circulant block diagonalization W C W^P",
        "svd": "analytic singular value decomposition A = U S V^P",
        "signchar": "sign characteristics of a *-palindromic polynomial",
        "perturb": "track eigenvalues of a perturbed palindromic polynomial",
    }
    for name, help_text in specs.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("input", help="input JSON file")
        sp.add_argument("--grid", type=int, default=None, metavar="K",
                        help="sample grid size (power of two)")
        sp.add_argument("--tol", type=float, default=1e-8,
                        help="verification tolerance, in (0, 1e-2]")
        sp.add_argument("--max-period", type=int, default=None, metavar="P",
                        help="cap on the period multiplier search")
        sp.add_argument("--branch-angle", type=float, default=0.0,
                        metavar="TAU",
                        help="rotate the square-root branch cut to -e^{i TAU}")
        sp.add_argument("--abs-singular-values", action="store_true",
                        help="CSV gets |S(theta)| instead of signed curves")
        sp.add_argument("--out", default=None, metavar="PATH",
                        help="write result JSON here instead of stdout")
        sp.add_argument("--csv", default=None, metavar="PATH",
                        help="export curve samples as theta,branch,value")
        sp.add_argument("--no-plot", action="store_true",
                        help="skip the PNG rendered alongside the CSV")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        cfg = RunConfig(
            command=ns.command,
            input_path=ns.input,
            grid=ns.grid,
            tol=ns.tol,
            max_period=ns.max_period,
            branch_angle=ns.branch_angle,
            abs_singular_values=ns.abs_singular_values,
            out=ns.out,
            csv=ns.csv,
            no_plot=ns.no_plot,
        )
        return run(cfg)
    except ParahermError as e:
        report = {"error": type(e).__name__, "message": str(e)}
        if getattr(e, "payload", None):
            clean = {}
            for k, v in e.payload.items():
                if isinstance(v, (numbers.Number, str, bool, list, tuple)):
                    clean[k] = v
            if clean:
                report["payload"] = clean
        sys.stderr.write(render_json(report) + "\n")
        return 1 if isinstance(e, VALIDATION_ERRORS) else 2


if __name__ == "__main__":
    sys.exit(main())
