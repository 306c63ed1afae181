"""Command-line client for the laboratory service.

The CLI never computes anything itself: it builds a request, sends it to the
HTTP service (an in-process instance by default, a remote one via
``--server``), and renders the JSON response as line-oriented key/value
records.  Floating-point values print with six significant digits plus a
full-precision ``raw=`` field; identical invocations emit identical bytes.

Exit codes: 0 success, 1 computation or service error, 2 usage error.
"""

from __future__ import annotations

import sys
from typing import Optional

import click
import httpx


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g} raw={value!r}"
    return str(value)


def echo_record(key: str, value) -> None:
    click.echo(f"{key} {_format_value(value)}")


def echo_block(prefix: str, payload: dict) -> None:
    for key, value in payload.items():
        echo_record(f"{prefix}{key}", value)


class ServiceClient:
    """HTTP client bound either to a remote server or an in-process app."""

    def __init__(self, server: Optional[str]):
        if server:
            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                # The in-process transport is an implementation detail; keep
                # its import-time environment notices out of command output.
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import app

            self._client = TestClient(app, raise_server_exceptions=True)

    def call(self, method: str, path: str, **kwargs) -> dict:
        try:
            response = self._client.request(method, path, **kwargs)
        except httpx.HTTPError as exc:
            raise click.ClickException(f"service unreachable: {exc}") from exc
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise click.ClickException(f"{response.status_code}: {detail}")
        return response.json()


def _client(ctx: click.Context) -> ServiceClient:
    return ServiceClient(ctx.obj.get("server"))


def _parse_floats(text: Optional[str]):
    if text is None:
        return None
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}") from exc


def _parse_ints(text: Optional[str]):
    if text is None:
        return None
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}") from exc


@click.group()
@click.option("--server", default=None, help="Base URL of a running service; in-process if omitted.")
@click.pass_context
def main(ctx: click.Context, server: Optional[str]) -> None:
    """Laboratory for local measurement protocols on product-state ensembles."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


# -- ensembles --------------------------------------------------------------


@main.group()
def ensembles() -> None:
    """State catalogs."""


@ensembles.command("list")
@click.pass_context
def ensembles_list(ctx: click.Context) -> None:
    data = _client(ctx).call("GET", "/ensembles")
    for name in data["names"]:
        click.echo(name)


@ensembles.command("show")
@click.argument("name")
@click.option("--thetas", default=None, help="Four comma-separated angles for nine-rotated.")
@click.option("--tol", default=1e-10, show_default=True, help="Orthonormality tolerance.")
@click.pass_context
def ensembles_show(ctx: click.Context, name: str, thetas: Optional[str], tol: float) -> None:
    params = {"tol": tol}
    if thetas:
        params["thetas"] = thetas
    data = _client(ctx).call("GET", f"/ensembles/{name}", params=params)
    echo_record("name", data["name"])
    echo_record("kind", data["kind"])
    echo_record("party_dims", ",".join(str(d) for d in data["party_dims"]))
    echo_record("orthonormal", bool(data["orthonormal"]))
    echo_record("gram_defect", float(data["gram_defect"]))
    for label, prior in zip(data["labels"], data["priors"]):
        echo_record(f"member {label} prior", float(prior))
    for member in data.get("members", []):
        factors = " ; ".join(
            "[" + ", ".join(f"{re:.6g}{im:+.6g}j" for re, im in factor) + "]"
            for factor in member["factors"]
        )
        click.echo(f"member {member['label']} factors {factors}")
    for label, ket in zip(data["labels"], data.get("kets", [])):
        amplitudes = ", ".join(f"{re:.6g}{im:+.6g}j" for re, im in ket)
        click.echo(f"member {label} ket [{amplitudes}]")
    for label, rho in zip(data["labels"], data.get("density_operators", [])):
        rows = " ; ".join(
            "[" + ", ".join(f"{re:.6g}{im:+.6g}j" for re, im in row) + "]" for row in rho
        )
        click.echo(f"member {label} density {rows}")


# -- protocol ---------------------------------------------------------------


def _run_request(ctx, tree_path, ensemble, thetas, keep) -> dict:
    with open(tree_path, "r", encoding="utf-8") as fh:
        tree_text = fh.read()
    payload = {"ensemble": ensemble, "tree_text": tree_text}
    parsed = _parse_floats(thetas)
    if parsed is not None:
        payload["thetas"] = parsed
    kept = _parse_ints(keep)
    if kept is not None:
        payload["keep"] = kept
    return _client(ctx).call("POST", "/protocol/run", json=payload)


@main.group()
def protocol() -> None:
    """Execute serialized protocol trees."""


@protocol.command("run")
@click.option("--tree", "tree_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--ensemble", default="nine", show_default=True)
@click.option("--thetas", default=None)
@click.option("--keep", default=None, help="Comma-separated member positions to keep.")
@click.pass_context
def protocol_run(ctx, tree_path, ensemble, thetas, keep) -> None:
    data = _run_request(ctx, tree_path, ensemble, thetas, keep)
    echo_record("mutual_information_bits", float(data["mutual_information"]))
    echo_record("prior_entropy_bits", float(data["prior_entropy"]))
    echo_record("max_leaf_overlap", float(data["max_leaf_overlap"]))
    for leaf, mass in zip(data["leaves"], data["outcome_masses"]):
        click.echo(
            f"leaf {leaf['record']} kind={leaf['kind']} {leaf['detail']} "
            f"mass={mass:.6g} overlap={leaf['max_overlap']:.6g}"
        )


@protocol.command("mi")
@click.option("--tree", "tree_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--ensemble", default="nine", show_default=True)
@click.option("--thetas", default=None)
@click.option("--keep", default=None)
@click.pass_context
def protocol_mi(ctx, tree_path, ensemble, thetas, keep) -> None:
    data = _run_request(ctx, tree_path, ensemble, thetas, keep)
    echo_record("mutual_information_bits", float(data["mutual_information"]))


# -- strategy ---------------------------------------------------------------


@main.group()
def strategy() -> None:
    """Named measurement strategies."""


@strategy.command("build")
@click.argument("family")
@click.option("--params", default=None, help="Comma-separated strategy parameters.")
@click.option("--excluded", default=4, show_default=True, help="Excluded member for domino-cut.")
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
@click.option("--evaluate/--no-evaluate", default=True, show_default=True)
@click.pass_context
def strategy_build(ctx, family, params, excluded, out_path, evaluate) -> None:
    payload = {
        "family": family,
        "params": _parse_floats(params) or [],
        "excluded": excluded,
        "evaluate": evaluate,
    }
    data = _client(ctx).call("POST", "/strategy/build", json=payload)
    echo_record("family", data["family"])
    if data["params"]:
        echo_record("params", ",".join(repr(p) for p in data["params"]))
    if data.get("mutual_information") is not None:
        echo_record("mutual_information_bits", float(data["mutual_information"]))
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(data["tree_text"])
        echo_record("tree_written", out_path)
    else:
        click.echo(data["tree_text"], nl=False)


@strategy.command("optimize")
@click.argument("family")
@click.option("--seed", default=0, show_default=True)
@click.option("--starts", default=20, show_default=True)
@click.pass_context
def strategy_optimize(ctx, family, seed, starts) -> None:
    data = _client(ctx).call(
        "POST", "/strategy/optimize", json={"family": family, "seed": seed, "starts": starts}
    )
    echo_record("family", data["family"])
    echo_record("seed", data["seed"])
    echo_record("starts", data["starts"])
    for k, p in enumerate(data["params"]):
        echo_record(f"param{k}", float(p))
    echo_record("mutual_information_bits", float(data["mutual_information"]))


# -- bound ------------------------------------------------------------------


@main.group()
def bound() -> None:
    """Information-deficit pipeline and rigidity checks."""


_BOUND_KEYS = ("epsilon", "delta", "beta", "z", "nu", "deficit")


@bound.command("optimize")
@click.pass_context
def bound_optimize(ctx) -> None:
    data = _client(ctx).call("POST", "/bound/optimize", json={})
    for key in _BOUND_KEYS:
        echo_record(key, float(data[key]))


@bound.command("sweep")
@click.option("--epsilon-grid", default=50, show_default=True)
@click.pass_context
def bound_sweep(ctx, epsilon_grid) -> None:
    data = _client(ctx).call("POST", "/bound/sweep", json={"epsilon_grid": epsilon_grid})
    for row in data["rows"]:
        click.echo(
            " ".join(f"{key}={row[key]:.6g} raw={row[key]!r}" for key in _BOUND_KEYS)
        )


@bound.command("verify")
@click.option("--samples", default=500, show_default=True)
@click.option("--epsilon", default=0.005, show_default=True)
@click.option("--delta", default=0.05, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.pass_context
def bound_verify(ctx, samples, epsilon, delta, seed) -> None:
    data = _client(ctx).call(
        "POST",
        "/bound/verify",
        json={"samples": samples, "epsilon": epsilon, "delta": delta, "seed": seed},
    )
    for key in ("requested", "attempts", "accepted", "failures"):
        echo_record(key, int(data[key]))
    echo_record("min_slack", float(data["min_slack"]))


@bound.command("three-party")
@click.pass_context
def bound_three_party(ctx) -> None:
    data = _client(ctx).call("POST", "/bound/three-party", json={})
    for step in data["steps"]:
        click.echo(f"step {step['name']} operator={step['party']} forced={step['forced']}")
    for label, params in sorted(data["solution_params"].items()):
        click.echo(f"solution {label} params=" + ",".join(f"{x:.6g}" for x in params))
    echo_record("max_identity_deviation", float(data["max_identity_deviation"]))
    echo_record("max_condition_residual", float(data["max_condition_residual"]))
    echo_record("proportional_to_identity", bool(data["proportional_to_identity"]))
    echo_record("spread_bound_ok", bool(data["spread_bound_ok"]))


# -- analyze ----------------------------------------------------------------


@main.group()
def analyze() -> None:
    """Structural and thermodynamic accounting."""


@analyze.command("dissect")
@click.argument("ensemble")
@click.option("--keep", default=None, help="Comma-separated member positions to keep.")
@click.pass_context
def analyze_dissect(ctx, ensemble, keep) -> None:
    payload = {"ensemble": ensemble}
    kept = _parse_ints(keep)
    if kept is not None:
        payload["keep"] = kept
    data = _client(ctx).call("POST", "/analysis/dissect", json=payload)
    echo_record("ensemble", data["ensemble"])
    echo_record("members", ",".join(data["members"]))
    echo_record("dissectible", bool(data["dissectible"]))
    if data.get("splitting_tree"):
        echo_record("splitting_tree", data["splitting_tree"])


_TABLE_COLUMNS = (
    "locally_preparable",
    "locally_measurable",
    "dissectible",
    "entropy_prep",
    "entropy_meas",
    "entanglement_prep",
    "entanglement_meas",
    "advice_meas",
)


@analyze.command("table")
@click.option("--format", "fmt", type=click.Choice(["records", "text"]), default="records",
              show_default=True)
@click.pass_context
def analyze_table(ctx, fmt) -> None:
    data = _client(ctx).call("GET", "/analysis/table")
    if fmt == "records":
        for row in data["rows"]:
            for column in _TABLE_COLUMNS:
                value = row[column]
                value = bool(value) if isinstance(value, bool) else value
                echo_record(f"{row['ensemble']} {column}", value)
        return
    header = ["ensemble"] + list(_TABLE_COLUMNS)
    cells = [header]
    for row in data["rows"]:
        rendered = [row["ensemble"]]
        for column in _TABLE_COLUMNS:
            value = row[column]
            rendered.append(("yes" if value else "no") if isinstance(value, bool) else f"{value:.3f}")
        cells.append(rendered)
    widths = [max(len(r[k]) for r in cells) for k in range(len(header))]
    for r in cells:
        click.echo("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())


@analyze.command("advice")
@click.option("--priors", required=True, help="Comma-separated prior probabilities.")
@click.option("--hintable", default=None, help="Comma-separated hintable member positions.")
@click.pass_context
def analyze_advice(ctx, priors, hintable) -> None:
    payload = {"priors": _parse_floats(priors)}
    hint = _parse_ints(hintable)
    if hint is not None:
        payload["hintable"] = hint
    data = _client(ctx).call("POST", "/analysis/advice", json=payload)
    echo_record("hintable", ",".join(str(h) for h in data["hintable"]))
    for k, q in enumerate(data["q"]):
        echo_record(f"q{k}", float(q))
    echo_record("cost_bits_per_state", float(data["cost"]))


@analyze.command("qcost")
@click.argument("variant")
@click.pass_context
def analyze_qcost(ctx, variant) -> None:
    data = _client(ctx).call("GET", f"/analysis/qcost/{variant}")
    echo_record("variant", data["variant"])
    echo_record("qubits", float(data["qubits"]))
    echo_record("ship_baseline_qubits", float(data["ship_baseline"]))


# -- weak -------------------------------------------------------------------


@main.group()
def weak() -> None:
    """Weak-measurement decomposition of a strong binary measurement."""


@weak.command("simulate")
@click.option("--alpha0", default=1.0, show_default=True, help="Branch-0 probability |alpha0|^2.")
@click.option("--epsilon", default=0.1, show_default=True)
@click.option("--repetitions", "--K", "repetitions", default=101, show_default=True)
@click.option("--runs", default=10000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.pass_context
def weak_simulate(ctx, alpha0, epsilon, repetitions, runs, seed) -> None:
    data = _client(ctx).call(
        "POST",
        "/weak/simulate",
        json={
            "alpha0_sq": alpha0,
            "epsilon": epsilon,
            "repetitions": repetitions,
            "runs": runs,
            "seed": seed,
        },
    )
    for key in (
        "runs",
        "empirical_majority0",
        "closed_form_majority0",
        "empirical_correct",
        "closed_form_correct",
        "three_sigma",
        "bernstein_bound",
        "single_weak_correct_prob",
    ):
        value = data[key]
        echo_record(key, float(value) if key != "runs" else int(value))


if __name__ == "__main__":
    sys.exit(main())
