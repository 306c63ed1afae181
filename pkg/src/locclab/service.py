"""FastAPI service exposing the laboratory's operations over HTTP.

Every endpoint is a stateless wrapper over the core package; identical
requests produce identical responses (simulation endpoints take explicit
seeds).  Domain errors map to 422, malformed protocol documents to 400.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from . import __version__, analysis, bound, weakmeas
from . import models as m
from .ensembles import (
    CATALOG_NAMES,
    KetEnsemble,
    ProductEnsemble,
    load_catalog,
    subset,
)
from .infotheory import shannon_entropy
from .protocol import (
    ProtocolError,
    TreeFormatError,
    emit_tree,
    parse_tree,
    posterior_probs,
    residual_overlaps,
    run_protocol,
)
from .protocol import apply_round, initial_posterior
from .strategies import FAMILIES, optimize

app = FastAPI(
    title="locclab",
    version=__version__,
    description=(
        "Laboratory for local measurement protocols on orthogonal "
        "product-state ensembles: catalogs, exact protocol execution, "
        "strategy optimization, deficit bounds, accounting, and "
        "weak-measurement simulation."
    ),
)


def _product_catalog(name: str, thetas=None, keep=None) -> ProductEnsemble:
    try:
        cat = load_catalog(name, thetas)
    except KeyError as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    if not isinstance(cat, ProductEnsemble):
        raise HTTPException(
            status_code=422, detail=f"catalog {name!r} is not a product ensemble"
        )
    if keep is not None:
        try:
            cat = subset(cat, keep)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
    return cat


def _leaf_models(run) -> list[m.LeafModel]:
    return [
        m.LeafModel(
            record=l.record,
            kind=l.kind,
            detail=l.detail,
            mass=l.mass,
            survivors=list(l.survivors),
            max_overlap=l.max_overlap,
        )
        for l in run.leaves
    ]


@app.get("/health", response_model=m.HealthResponse)
def health() -> m.HealthResponse:
    return m.HealthResponse(status="ok", version=__version__)


@app.get("/ensembles", response_model=m.CatalogList)
def list_ensembles() -> m.CatalogList:
    return m.CatalogList(names=list(CATALOG_NAMES))


@app.get("/ensembles/{name}", response_model=m.EnsembleDetail)
def show_ensemble(name: str, thetas: str | None = None, tol: float = 1e-10) -> m.EnsembleDetail:
    parsed = [float(t) for t in thetas.split(",")] if thetas else None
    if tol <= 0:
        raise HTTPException(status_code=422, detail="tol must be positive")
    try:
        cat = load_catalog(name, parsed)
    except KeyError as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    if isinstance(cat, ProductEnsemble):
        g = cat.gram()
        defect = float(np.max(np.abs(g - np.eye(cat.n_members))))
        return m.EnsembleDetail(
            name=name,
            kind="product",
            party_dims=list(cat.party_dims),
            labels=list(cat.labels),
            priors=[float(p) for p in cat.priors],
            members=[
                m.MemberModel(
                    label=cat.labels[k],
                    origin=cat.origin[k],
                    factors=[m.encode_complex_vector(f) for f in member.factors],
                )
                for k, member in enumerate(cat.members)
            ],
            gram_defect=defect,
            orthonormal=bool(defect <= tol),
        )
    if isinstance(cat, KetEnsemble):
        g = cat.gram()
        defect = float(np.max(np.abs(g - np.eye(len(cat.kets)))))
        return m.EnsembleDetail(
            name=name,
            kind="kets",
            party_dims=list(cat.party_dims),
            labels=list(cat.labels),
            priors=[float(p) for p in cat.priors],
            kets=[m.encode_complex_vector(v) for v in cat.kets],
            gram_defect=defect,
            orthonormal=bool(defect <= tol),
        )
    rho0, rho1 = cat
    return m.EnsembleDetail(
        name=name,
        kind="mixed-pair",
        party_dims=[2, 2],
        labels=["rho0", "rho1"],
        priors=[0.5, 0.5],
        density_operators=[m.encode_complex_matrix(rho0), m.encode_complex_matrix(rho1)],
        gram_defect=float(abs(np.trace(rho0 @ rho1).real)),
        orthonormal=bool(abs(np.trace(rho0 @ rho1).real) <= tol),
    )


@app.post("/protocol/run", response_model=m.ProtocolRunResponse)
def protocol_run(req: m.ProtocolRunRequest) -> m.ProtocolRunResponse:
    cat = _product_catalog(req.ensemble, req.thetas, req.keep)
    try:
        tree = parse_tree(req.tree_text)
        run = run_protocol(tree, cat)
    except (TreeFormatError, ProtocolError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return m.ProtocolRunResponse(
        mutual_information=run.mutual_information(),
        prior_entropy=shannon_entropy(cat.priors),
        outcomes=list(run.outcomes),
        outcome_masses=[float(x) for x in run.outcome_masses()],
        joint=[[float(x) for x in row] for row in run.joint],
        leaves=_leaf_models(run),
        max_leaf_overlap=max(l.max_overlap for l in run.leaves),
    )


@app.post("/protocol/posterior", response_model=m.PosteriorResponse)
def protocol_posterior(req: m.PosteriorRequest) -> m.PosteriorResponse:
    cat = _product_catalog(req.ensemble)
    try:
        tree = parse_tree(req.tree_text)
        probs = posterior_probs(tree, cat, req.record)
        post = initial_posterior(cat)
        node = tree
        for token in req.record:
            lookup = {e.outcome: (e, c) for e, c in zip(node.elements, node.children)}
            element, node = lookup[token]
            post = apply_round(post, element)
        overlap = residual_overlaps(post)
    except (TreeFormatError, ProtocolError, KeyError, AttributeError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return m.PosteriorResponse(
        record=list(req.record),
        probs=[float(p) for p in probs],
        max_residual_overlap=float(overlap),
    )


@app.post("/strategy/build", response_model=m.StrategyBuildResponse)
def strategy_build(req: m.StrategyBuildRequest) -> m.StrategyBuildResponse:
    if req.family == "domino-cut" and req.excluded != 4:
        try:
            from .strategies import build_domino_cut

            tree = build_domino_cut(req.excluded)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        params: tuple[float, ...] = ()
    else:
        family = FAMILIES.get(req.family)
        if family is None:
            raise HTTPException(status_code=404, detail=f"unknown family {req.family!r}")
        if len(req.params) != family.param_count:
            raise HTTPException(
                status_code=422,
                detail=f"family {family.name!r} takes {family.param_count} parameters",
            )
        try:
            tree = family.build(*req.params)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        params = tuple(req.params)
    response = m.StrategyBuildResponse(
        family=req.family, params=list(params), tree_text=emit_tree(tree)
    )
    if req.evaluate:
        run = run_protocol(tree, _product_catalog("nine"))
        response.mutual_information = run.mutual_information()
        response.leaves = _leaf_models(run)
    return response


@app.post("/strategy/optimize", response_model=m.StrategyOptimizeResponse)
def strategy_optimize(req: m.StrategyOptimizeRequest) -> m.StrategyOptimizeResponse:
    family = FAMILIES.get(req.family)
    if family is None:
        raise HTTPException(status_code=404, detail=f"unknown family {req.family!r}")
    if req.starts < 1:
        raise HTTPException(status_code=422, detail="starts must be positive")
    result = optimize(family, seed=req.seed, starts=req.starts)
    return m.StrategyOptimizeResponse(
        family=result.family,
        params=list(result.params),
        mutual_information=result.mutual_information,
        starts=result.starts,
        seed=result.seed,
    )


def _bound_model(rep: bound.BoundReport) -> m.BoundReportModel:
    return m.BoundReportModel(
        epsilon=rep.epsilon,
        delta=rep.delta,
        beta=rep.beta,
        z=rep.z,
        nu=rep.nu,
        deficit=rep.deficit,
    )


@app.post("/bound/optimize", response_model=m.BoundReportModel)
def bound_optimize() -> m.BoundReportModel:
    return _bound_model(bound.optimize_bound())


@app.post("/bound/sweep", response_model=m.BoundSweepResponse)
def bound_sweep(req: m.BoundSweepRequest) -> m.BoundSweepResponse:
    if req.epsilon_grid < 2:
        raise HTTPException(status_code=422, detail="epsilon_grid needs at least 2 points")
    return m.BoundSweepResponse(rows=[_bound_model(r) for r in bound.sweep(req.epsilon_grid)])


@app.post("/bound/verify", response_model=m.BoundVerifyResponse)
def bound_verify(req: m.BoundVerifyRequest) -> m.BoundVerifyResponse:
    try:
        sv = bound.verify_sampled(req.samples, req.epsilon, req.delta, seed=req.seed)
    except (bound.DomainError, RuntimeError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return m.BoundVerifyResponse(
        requested=sv.requested,
        attempts=sv.attempts,
        accepted=sv.accepted,
        failures=sv.failures,
        min_slack=sv.min_slack,
    )


@app.post("/bound/three-party", response_model=m.RigidityResponse)
def bound_three_party() -> m.RigidityResponse:
    rep = bound.three_party_rigidity()
    return m.RigidityResponse(
        steps=[m.RigidityStepModel(name=s.name, party=s.party, forced=s.forced) for s in rep.steps],
        solution_params={k: [float(x) for x in v] for k, v in rep.solution_params.items()},
        max_identity_deviation=rep.max_identity_deviation,
        max_condition_residual=rep.max_condition_residual,
        proportional_to_identity=rep.proportional_to_identity,
        spread_bound_ok=rep.spread_bound_ok,
    )


def _splitting_text(tree: analysis.SplittingTree, cat: ProductEnsemble) -> str:
    if isinstance(tree, analysis.SplitLeaf):
        return cat.labels[tree.member]
    party = "ABC"[tree.party]
    left = _splitting_text(tree.children[0], cat)
    right = _splitting_text(tree.children[1], cat)
    return f"({party}: {left} | {right})"


@app.post("/analysis/dissect", response_model=m.DissectResponse)
def analysis_dissect(req: m.DissectRequest) -> m.DissectResponse:
    cat = _product_catalog(req.ensemble, keep=req.keep)
    ok, tree = analysis.is_dissectible(cat)
    return m.DissectResponse(
        ensemble=req.ensemble,
        members=list(cat.labels),
        dissectible=ok,
        splitting_tree=_splitting_text(tree, cat) if ok else None,
    )


@app.get("/analysis/table", response_model=m.TableResponse)
def analysis_table() -> m.TableResponse:
    return m.TableResponse(
        rows=[
            m.AccountingRowModel(
                ensemble=r.ensemble,
                locally_preparable=r.locally_preparable,
                locally_measurable=r.locally_measurable,
                dissectible=r.dissectible,
                entropy_prep=r.entropy_prep,
                entropy_meas=r.entropy_meas,
                entanglement_prep=r.entanglement_prep,
                entanglement_meas=r.entanglement_meas,
                advice_meas=r.advice_meas,
            )
            for r in analysis.entropy_table()
        ]
    )


@app.post("/analysis/advice", response_model=m.AdviceResponse)
def analysis_advice(req: m.AdviceRequest) -> m.AdviceResponse:
    hintable = req.hintable if req.hintable is not None else list(range(len(req.priors)))
    try:
        plan = analysis.advice_cost(req.priors, hintable)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return m.AdviceResponse(
        hintable=list(plan.hintable),
        q=[float(x) for x in plan.q],
        cost=plan.cost,
    )


@app.get("/analysis/qcost/{variant}", response_model=m.QuantumCostResponse)
def analysis_qcost(variant: str) -> m.QuantumCostResponse:
    try:
        qc = analysis.quantum_cost(variant)
    except ValueError as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc
    return m.QuantumCostResponse(
        variant=qc.variant, qubits=qc.qubits, ship_baseline=qc.ship_baseline
    )


@app.post("/weak/simulate", response_model=m.WeakSimulateResponse)
def weak_simulate(req: m.WeakSimulateRequest) -> m.WeakSimulateResponse:
    try:
        scheme = weakmeas.WeakScheme(req.epsilon, req.repetitions, req.seed)
        em = weakmeas.majority_frequency(req.alpha0_sq, scheme, req.runs)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return m.WeakSimulateResponse(
        runs=em.runs,
        empirical_majority0=em.majority0_frequency,
        closed_form_majority0=em.closed_form_majority0,
        empirical_correct=em.correct_frequency,
        closed_form_correct=em.closed_form_correct,
        three_sigma=3.0 * em.sigma(),
        bernstein_bound=weakmeas.bernstein_bound(req.epsilon, req.repetitions),
        single_weak_correct_prob=weakmeas.single_weak_correct_prob(req.epsilon),
    )
