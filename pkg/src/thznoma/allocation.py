"""Energy-efficiency power allocation.

The fractional EE objective is handled by an outer Dinkelbach loop: for a
fixed ratio parameter eta, the inner problem max sum((1+F)*R(p)) - eta*xi*sum(p)
is solved with consensus ADMM, splitting into a smooth (nonconvex) update
solved by projected gradient with backtracking, a Euclidean projection onto
the power-budget and fronthaul constraint set, and a dual ascent step. The
returned allocation is always feasible and never worse than the equal-power
initialization.

Internally the smooth update works on the objective divided by the
per-cluster bandwidth (spectral-efficiency units) so that the augmented
Lagrangian parameter mu operates at a sensible scale; projections, duals,
and all reported quantities stay in watts and bits/s.
"""

from dataclasses import dataclass

import numpy as np

from .channel import noise_power_watts
from .power import circuit_power, energy_efficiency, total_power
from .validation import require_fraction, require_positive

_LN2 = np.log(2.0)


class InfeasibleConstraintsError(RuntimeError):
    """The constraint set admits no usable power allocation."""


@dataclass(frozen=True)
class SolverParams:
    """Tolerances and iteration caps of the Dinkelbach + ADMM solver."""

    mu: float = 0.05
    dinkelbach_tol_rel: float = 1e-4
    max_outer_iterations: int = 50
    admm_tol: float = 1e-6
    max_inner_iterations: int = 200
    x_update_tol: float = 1e-6
    x_update_max_steps: int = 500

    def __post_init__(self):
        require_positive("mu", self.mu)
        require_positive("dinkelbach_tol_rel", self.dinkelbach_tol_rel)
        require_positive("admm_tol", self.admm_tol)


@dataclass
class _BsState:
    """Per-BS quantities in solver order (clusters contiguous, SIC-sorted)."""

    user_ids: np.ndarray  # original user index per solver slot
    cluster_ids: np.ndarray  # cluster of each solver slot
    own_gains: np.ndarray  # beam gain toward the user's own cluster
    gain_matrix: np.ndarray  # (U, N) gains toward every beam
    coupling: np.ndarray  # (U, U); interference denominator = coupling @ p + sigma2
    weights: np.ndarray  # 1 + cache efficiency per user
    cache_eff: np.ndarray


class LinkModel:
    """Fixed link state (gains, ordering, noise, constraints) for one solve."""

    def __init__(
        self,
        per_bs_gains,
        *,
        bandwidth_hz,
        num_clusters,
        noise_psd_dbm_hz,
        cache,
        power_params,
        sic_error,
        circuit_w,
    ):
        require_fraction("sic_error", sic_error)
        self.bandwidth_hz = bandwidth_hz
        self.num_clusters = num_clusters
        self.cluster_bw = bandwidth_hz / num_clusters
        self.sigma2_w = noise_power_watts(noise_psd_dbm_hz, bandwidth_hz, num_clusters)
        self.noise_psd_w_hz = 10.0 ** ((noise_psd_dbm_hz - 30.0) / 10.0)
        self.cache = cache
        self.power_params = power_params
        self.sic_error = sic_error
        self.circuit_w = circuit_w
        self._per_bs_gains = list(per_bs_gains)
        self._noise_psd_dbm_hz = noise_psd_dbm_hz
        self.bs_states = [self._build_bs_state(g) for g in per_bs_gains]
        self.users_per_bs = [len(s.user_ids) for s in self.bs_states]
        self.num_bs = len(self.bs_states)

    def with_sic_error(self, sic_error):
        """Same link state under a different SIC cancellation error."""
        return LinkModel(
            self._per_bs_gains,
            bandwidth_hz=self.bandwidth_hz,
            num_clusters=self.num_clusters,
            noise_psd_dbm_hz=self._noise_psd_dbm_hz,
            cache=self.cache,
            power_params=self.power_params,
            sic_error=sic_error,
            circuit_w=self.circuit_w,
        )

    def solver_order(self, powers):
        """Stack a (B, U) original-order power array into solver order."""
        return np.concatenate(
            [powers[b][state.user_ids] for b, state in enumerate(self.bs_states)]
        )

    def _build_bs_state(self, gains):
        order = np.concatenate(gains.order)
        labels = gains.labels[order]
        gmat = gains.gain_matrix[order]
        own = gmat[np.arange(len(order)), labels]
        num_users = len(order)
        coupling = np.zeros((num_users, num_users))
        for u in range(num_users):
            same = labels == labels[u]
            coupling[u, same] = self.sic_error * own[u]
            coupling[u, : u + 1][same[: u + 1]] = own[u]
            coupling[u, ~same] = gmat[u, labels[~same]]
            coupling[u, u] = 0.0
        eff = np.full(num_users, self.cache.cache_efficiency)
        return _BsState(
            user_ids=order,
            cluster_ids=labels,
            own_gains=own,
            gain_matrix=gmat,
            coupling=coupling,
            weights=1.0 + eff,
            cache_eff=eff,
        )

    # -- per-BS physics ----------------------------------------------------

    def sinr(self, state, p):
        denom = state.coupling @ p + self.sigma2_w
        return p * state.own_gains / denom

    def rates(self, state, p):
        """Per-user NOMA rates in bits/s, solver order."""
        return self.cluster_bw * np.log2(1.0 + self.sinr(state, p))

    def spectral_utility(self, state, p):
        """Cache-weighted sum of log2(1+SINR) (rate / cluster bandwidth)."""
        return float(np.dot(state.weights, np.log2(1.0 + self.sinr(state, p))))

    def spectral_utility_grad(self, state, p):
        denom = state.coupling @ p + self.sigma2_w
        signal = p * state.own_gains
        direct = state.weights * state.own_gains / (denom + signal)
        q = state.weights * signal / (denom * (denom + signal))
        return (direct - state.coupling.T @ q) / _LN2

    def fronthaul_load(self, state, p):
        rates = self.rates(state, p)
        return float(np.sum(rates * (1.0 - state.cache_eff)))

    def weighted_rate(self, state, p):
        return float(np.dot(state.weights, self.rates(state, p)))

    # -- stacked helpers ---------------------------------------------------

    def split(self, x):
        out = []
        start = 0
        for n in self.users_per_bs:
            out.append(x[start : start + n])
            start += n
        return out

    @property
    def total_users(self):
        return int(sum(self.users_per_bs))

    def total_powers(self, x):
        """Full per-BS power draw (circuit + amplifier-scaled transmit)."""
        return [
            total_power(self.circuit_w, pb, self.power_params.pa_inefficiency)
            for pb in self.split(x)
        ]

    def ee_ratio(self, x):
        """Global ratio: cache-weighted sum rate over total consumed power."""
        num = sum(
            self.weighted_rate(s, pb) for s, pb in zip(self.bs_states, self.split(x))
        )
        return num / float(np.sum(self.total_powers(x)))

    def ee_reported(self, x):
        """Reported EE: per-BS rate-over-power ratios, summed (bits/joule)."""
        rates = [self.rates(s, pb) for s, pb in zip(self.bs_states, self.split(x))]
        effs = [s.cache_eff for s in self.bs_states]
        return energy_efficiency(rates, effs, self.total_powers(x))

    def subtractive_objective(self, x, eta):
        """Weighted sum rate minus eta * amplifier-scaled transmit power."""
        num = sum(
            self.weighted_rate(s, pb) for s, pb in zip(self.bs_states, self.split(x))
        )
        xi = self.power_params.pa_inefficiency
        return num - eta * xi * float(np.sum(x))


@dataclass
class PowerSolution:
    """Outcome of one power-allocation solve.

    Powers and rates are reported in the original per-BS user order.
    """

    powers: np.ndarray  # (B, U) watts
    cluster_powers: np.ndarray  # (B, N) watts
    rates: np.ndarray  # (B, U) bits/s
    ee: float  # bits/joule, per-BS ratios summed
    eta: float  # final Dinkelbach ratio (global)
    dinkelbach_trace: list
    admm_traces: list
    outer_iterations: int
    inner_iterations_total: int
    converged: bool
    inner_converged: bool
    total_power_per_bs: np.ndarray
    budget_slack: np.ndarray  # P_max - sum(p) per BS
    fronthaul_slack: np.ndarray  # C_FH - load per BS

    @property
    def feasible(self):
        return bool(
            np.all(self.powers >= 0)
            and np.all(self.budget_slack >= -1e-9)
            and np.all(self.fronthaul_slack >= -1e-9)
        )

    @property
    def sum_rate_bps(self):
        return float(self.rates.sum())


def project_power_budget(v, p_max):
    """Euclidean projection onto {z >= 0, sum(z) <= p_max}."""
    clipped = np.maximum(v, 0.0)
    if clipped.sum() <= p_max:
        return clipped
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - p_max
    idx = np.arange(1, len(u) + 1)
    positive = u - cumulative / idx > 0
    rho = idx[positive][-1]
    theta = cumulative[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _fronthaul_rescale(model, state, p, capacity):
    """Largest uniform scale s in [0, 1] keeping the fronthaul load feasible.

    The load is monotone in a uniform power scale, so bisection applies;
    the returned scale is taken from the feasible side.
    """
    if model.fronthaul_load(state, p) <= capacity:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if model.fronthaul_load(state, mid * p) <= capacity:
            lo = mid
        else:
            hi = mid
    return lo


def project_feasible(model, x):
    """Project a stacked power vector onto the per-BS constraint set."""
    capacity = model.cache.fronthaul_capacity_bps
    p_max = model.power_params.p_max_w
    pieces = []
    for state, vb in zip(model.bs_states, model.split(x)):
        zb = project_power_budget(vb, p_max)
        scale = _fronthaul_rescale(model, state, zb, capacity)
        pieces.append(scale * zb)
    return np.concatenate(pieces)


def admm_z_update(model, x, lam, mu):
    """Consensus update: project X + lambda/mu onto the constraint set."""
    require_positive("mu", mu)
    return project_feasible(model, x + lam / mu)


def admm_lambda_update(lam, x, z, mu):
    """Dual ascent on the consensus gap."""
    require_positive("mu", mu)
    return lam + mu * (x - z)


def admm_x_update(model, x, z, lam, eta, mu, tol=1e-6, max_steps=500):
    """Minimize the smooth augmented term over X >= 0 by projected gradient.

    Backtracking enforces a quadratic-majorization decrease, so the
    objective is non-increasing across steps; iteration stops when the
    gradient-mapping norm drops below `tol`. Works in spectral units
    (objective divided by the cluster bandwidth).
    """
    require_positive("mu", mu)
    eta_s = eta / model.cluster_bw
    xi = model.power_params.pa_inefficiency

    def objective(p):
        utility = sum(
            model.spectral_utility(s, pb)
            for s, pb in zip(model.bs_states, model.split(p))
        )
        value = eta_s * xi * p.sum() - utility
        value += float(lam @ (p - z)) + 0.5 * mu * float(np.sum((p - z) ** 2))
        if not np.isfinite(value):
            raise FloatingPointError("non-finite power-allocation objective")
        return value

    def gradient(p):
        pieces = [
            -model.spectral_utility_grad(s, pb)
            for s, pb in zip(model.bs_states, model.split(p))
        ]
        return np.concatenate(pieces) + eta_s * xi + lam + mu * (p - z)

    # Armijo backtracking: the utility's curvature spans many orders of
    # magnitude (flat in the interior, ~gain/noise next to p = 0), so a
    # quadratic-majorization test would stall against the boundary wall.
    step = 1.0
    current = objective(x)
    for _ in range(max_steps):
        grad = gradient(x)
        accepted = False
        while step >= 1e-18:
            candidate = np.maximum(x - step * grad, 0.0)
            delta = candidate - x
            descent = float(grad @ delta)  # <= 0 along the projection arc
            if descent == 0.0:
                return x  # stationary corner
            value = objective(candidate)
            if value <= current + 1e-4 * descent:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        mapping_norm = np.linalg.norm(delta) / step
        x = candidate
        current = value
        if mapping_norm < tol:
            break
        step = min(step * 2.0, 1e8)
    return x


def _evaluate(model, x, dinkelbach_trace, admm_traces, outer, inner, converged,
              inner_converged):
    powers = np.zeros((model.num_bs, max(model.users_per_bs)))
    rates = np.zeros_like(powers)
    cluster_powers = np.zeros((model.num_bs, model.num_clusters))
    budget_slack = np.zeros(model.num_bs)
    fronthaul_slack = np.zeros(model.num_bs)
    for b, (state, pb) in enumerate(zip(model.bs_states, model.split(x))):
        powers[b, state.user_ids] = pb
        rates[b, state.user_ids] = model.rates(state, pb)
        for n in range(model.num_clusters):
            cluster_powers[b, n] = pb[state.cluster_ids == n].sum()
        budget_slack[b] = model.power_params.p_max_w - pb.sum()
        fronthaul_slack[b] = model.cache.fronthaul_capacity_bps - model.fronthaul_load(
            state, pb
        )
    return PowerSolution(
        powers=powers,
        cluster_powers=cluster_powers,
        rates=rates,
        ee=model.ee_reported(x),
        eta=model.ee_ratio(x),
        dinkelbach_trace=list(dinkelbach_trace),
        admm_traces=admm_traces,
        outer_iterations=outer,
        inner_iterations_total=inner,
        converged=converged,
        inner_converged=inner_converged,
        total_power_per_bs=np.array(model.total_powers(x)),
        budget_slack=budget_slack,
        fronthaul_slack=fronthaul_slack,
    )


def equal_power_vector(model):
    """Equal split of the BS budget, rescaled if the fronthaul binds."""
    pieces = []
    for state in model.bs_states:
        n = len(state.user_ids)
        pieces.append(np.full(n, model.power_params.p_max_w / n))
    return project_feasible(model, np.concatenate(pieces))


def equal_power(model):
    """Baseline: every user gets P_max / U, fronthaul-rescaled if needed."""
    x = equal_power_vector(model)
    eta = model.ee_ratio(x)
    return _evaluate(model, x, [eta], [], 0, 0, True, True)


def random_power(model, seed):
    """Baseline: powers proportional to uniform draws, normalized to P_max."""
    rng = np.random.default_rng(seed)
    pieces = []
    for state in model.bs_states:
        draws = rng.uniform(size=len(state.user_ids))
        pieces.append(draws / draws.sum() * model.power_params.p_max_w)
    x = project_feasible(model, np.concatenate(pieces))
    eta = model.ee_ratio(x)
    return _evaluate(model, x, [eta], [], 0, 0, True, True)


def _dinkelbach_run(model, params, x0):
    """One Dinkelbach loop around consensus-ADMM inner solves, from x0.

    Each inner solve warm-starts from the incumbent and the incumbent is
    kept whenever an inner solve fails to improve it, so the eta trace is
    non-decreasing and the result is never worse than the starting point.
    """
    x = x0.copy()
    z = x0.copy()
    lam = np.zeros_like(x0)
    eta = model.ee_ratio(x0)
    trace = [eta]
    admm_traces = []
    inner_total = 0
    converged = False
    inner_converged = True
    outer = 0
    incumbent = x0.copy()
    for outer in range(1, params.max_outer_iterations + 1):
        best_val = model.subtractive_objective(z, eta)
        best_z = z.copy()
        run_trace = []
        run_converged = False
        iters = 0
        for iters in range(1, params.max_inner_iterations + 1):
            x = admm_x_update(
                model,
                x,
                z,
                lam,
                eta,
                params.mu,
                tol=params.x_update_tol,
                max_steps=params.x_update_max_steps,
            )
            z = admm_z_update(model, x, lam, params.mu)
            lam = admm_lambda_update(lam, x, z, params.mu)
            value = model.subtractive_objective(z, eta)
            if value > best_val:
                best_val = value
                best_z = z.copy()
            residual = float(np.max(np.abs(x - z)))
            run_trace.append((value, residual))
            if residual < params.admm_tol:
                run_converged = True
                break
        inner_total += iters
        inner_converged = inner_converged and run_converged
        admm_traces.append(run_trace)
        new_eta = model.ee_ratio(best_z)
        if new_eta < eta:
            # Inner solve failed to improve the ratio; keep the incumbent.
            break
        incumbent = best_z.copy()
        delta_rel = (new_eta - eta) / max(new_eta, np.finfo(float).tiny)
        eta = new_eta
        trace.append(eta)
        z = best_z.copy()
        if delta_rel <= params.dinkelbach_tol_rel:
            converged = True
            break
    return {
        "x": incumbent,
        "trace": trace,
        "admm_traces": admm_traces,
        "outer": outer,
        "inner": inner_total,
        "converged": converged,
        "inner_converged": inner_converged,
    }


def _starting_points(model):
    """Deterministic multi-start set: equal split plus one start per cluster.

    The equal allocation is the textbook initialization; the per-cluster
    concentrations reach basins where only one beam is active, which the
    equal start can miss when cross-beam interference is strong.
    """
    starts = [equal_power_vector(model)]
    for n in range(model.num_clusters):
        pieces = []
        for state in model.bs_states:
            p = np.zeros(len(state.user_ids))
            members = np.flatnonzero(state.cluster_ids == n)
            if len(members):
                p[members] = model.power_params.p_max_w / (2.0 * len(members))
            pieces.append(p)
        starts.append(project_feasible(model, np.concatenate(pieces)))
    return starts


def allocate_power_admm(model, params=None):
    """EE-maximizing power allocation: Dinkelbach + ADMM with multi-start.

    Runs the Dinkelbach loop from each deterministic starting point and
    returns the best solution by reported EE; the equal allocation itself
    is always a candidate, so the result is never worse than equal power.
    The returned traces and iteration counts describe the winning run,
    except inner_iterations_total, which counts work across all starts.
    """
    params = params or SolverParams()
    runs = [_dinkelbach_run(model, params, x0) for x0 in _starting_points(model)]
    total_inner = sum(r["inner"] for r in runs)
    equal_x = equal_power_vector(model)
    best = max(runs, key=lambda r: model.ee_reported(r["x"]))
    if model.ee_reported(equal_x) > model.ee_reported(best["x"]):
        best = {
            "x": equal_x,
            "trace": [model.ee_ratio(equal_x)],
            "admm_traces": [],
            "outer": 0,
            "inner": 0,
            "converged": True,
            "inner_converged": True,
        }
    return _evaluate(
        model,
        best["x"],
        best["trace"],
        best["admm_traces"],
        best["outer"],
        total_inner,
        best["converged"],
        best["inner_converged"],
    )


def oma_rates(model, x=None):
    """FDMA reference rates: each user holds W / U exclusively.

    Intra-cluster interference vanishes (single occupancy); cross-beam
    interference from the other clusters is retained; noise spans the
    user's own bandwidth slice.
    """
    if x is None:
        pieces = [
            np.full(n, model.power_params.p_max_w / n) for n in model.users_per_bs
        ]
        x = np.concatenate(pieces)
    per_bs = []
    for state, pb in zip(model.bs_states, model.split(x)):
        n_users = len(pb)
        user_bw = model.bandwidth_hz / n_users
        sigma2 = model.noise_psd_w_hz * user_bw
        cluster_totals = np.array(
            [pb[state.cluster_ids == n].sum() for n in range(model.num_clusters)]
        )
        mci = state.gain_matrix @ cluster_totals - state.gain_matrix[
            np.arange(n_users), state.cluster_ids
        ] * cluster_totals[state.cluster_ids]
        sinr = pb * state.own_gains / (mci + sigma2)
        per_bs.append(user_bw * np.log2(1.0 + sinr))
    return per_bs, x


def oma_solution(model, x=None):
    """Evaluate the FDMA reference as a PowerSolution-shaped result."""
    per_bs, x = oma_rates(model, x)
    # Rescale if the fronthaul binds under OMA rates (monotone in scale).
    capacity = model.cache.fronthaul_capacity_bps
    loads = [
        float(np.sum(r * (1.0 - s.cache_eff)))
        for r, s in zip(per_bs, model.bs_states)
    ]
    if any(load > capacity for load in loads):
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            trial, _ = oma_rates(model, mid * x)
            worst = max(
                float(np.sum(r * (1.0 - s.cache_eff)))
                for r, s in zip(trial, model.bs_states)
            )
            if worst <= capacity:
                lo = mid
            else:
                hi = mid
        x = lo * x
        per_bs, x = oma_rates(model, x)

    powers = np.zeros((model.num_bs, max(model.users_per_bs)))
    rates = np.zeros_like(powers)
    cluster_powers = np.zeros((model.num_bs, model.num_clusters))
    budget_slack = np.zeros(model.num_bs)
    fronthaul_slack = np.zeros(model.num_bs)
    for b, (state, pb) in enumerate(zip(model.bs_states, model.split(x))):
        powers[b, state.user_ids] = pb
        rates[b, state.user_ids] = per_bs[b]
        for n in range(model.num_clusters):
            cluster_powers[b, n] = pb[state.cluster_ids == n].sum()
        budget_slack[b] = model.power_params.p_max_w - pb.sum()
        fronthaul_slack[b] = model.cache.fronthaul_capacity_bps - float(
            np.sum(per_bs[b] * (1.0 - state.cache_eff))
        )
    total = model.total_powers(x)
    effs = [s.cache_eff for s in model.bs_states]
    ee = energy_efficiency(per_bs, effs, total)
    weighted = sum(float(np.dot(1.0 + e, r)) for e, r in zip(effs, per_bs))
    eta = weighted / float(np.sum(total))
    return PowerSolution(
        powers=powers,
        cluster_powers=cluster_powers,
        rates=rates,
        ee=ee,
        eta=eta,
        dinkelbach_trace=[eta],
        admm_traces=[],
        outer_iterations=0,
        inner_iterations_total=0,
        converged=True,
        inner_converged=True,
        total_power_per_bs=np.array(total),
        budget_slack=budget_slack,
        fronthaul_slack=fronthaul_slack,
    )


def build_link_model(
    channel_set,
    labels_per_bs,
    precoders,
    *,
    bandwidth_hz,
    num_clusters,
    noise_psd_dbm_hz,
    cache,
    power_params,
    sic_error,
    quant_bits,
    architecture,
):
    """Assemble the solver's link model from fitted clustering and precoding."""
    num_rf = (
        channel_set.vectors.shape[2] if architecture == "full-digital" else num_clusters
    )
    circuit = circuit_power(
        power_params,
        channel_set.vectors.shape[2],
        num_rf,
        quant_bits if architecture == "sub-connected" else 0,
        architecture,
    )
    per_bs_gains = [
        precoder.effective_gains(channel_set.vectors[b], labels_per_bs[b])
        for b, precoder in enumerate(precoders)
    ]
    return LinkModel(
        per_bs_gains,
        bandwidth_hz=bandwidth_hz,
        num_clusters=num_clusters,
        noise_psd_dbm_hz=noise_psd_dbm_hz,
        cache=cache,
        power_params=power_params,
        sic_error=sic_error,
        circuit_w=circuit,
    )
