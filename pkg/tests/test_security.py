"""Decoy checking, the intercept-resend attacker, and sealing audits."""

import itertools

import numpy as np
import pytest

from cqss.errors import PolicyError
from cqss.protocol import AccessPolicy, setup
from cqss.qubits import (
    CORRECTION_FOR_OUTCOME,
    BellKind,
    QuantumRegister,
    RandomSource,
    fidelity,
    pure_density,
    trace_distance,
)
from cqss.security import (
    DecoyPlan,
    DecoyState,
    EveModel,
    controller_channel_check,
    eve_tap,
    insert_decoys,
    no_information_audit,
    verify_decoys,
)


def haar(width, seed):
    rng = RandomSource(seed)
    vec = rng.complex_normals(2**width)
    return vec / np.linalg.norm(vec)


def decoy_run(width, decoys, *, seed, eve=None, secret_seed=70):
    rng = RandomSource(seed)
    plan = DecoyPlan.random(width, decoys, rng)
    policy = AccessPolicy.round_robin(width, width, width)
    run = setup(
        width,
        width,
        width,
        haar(width, secret_seed),
        policy,
        rng,
        decoy_plan=plan,
        eve=eve,
    )
    run.distribute_all()
    return run, plan


# -- plans and insertion -----------------------------------------------------------


class TestDecoyPlan:
    def test_random_plan_is_valid_and_deterministic(self):
        plan = DecoyPlan.random(4, 3, RandomSource(1))
        plan.validate(4)
        assert plan.count == 3
        assert plan == DecoyPlan.random(4, 3, RandomSource(1))
        assert all(1 <= p <= 7 for p in plan.placements)

    def test_empty_plan(self):
        plan = DecoyPlan.random(4, 0, RandomSource(1))
        assert plan.count == 0 and plan.record == {}

    def test_malformed_plan_rejected(self):
        with pytest.raises(PolicyError):
            DecoyPlan((1, 1), (DecoyState.ZERO, DecoyState.ONE)).validate(2)
        with pytest.raises(PolicyError):
            DecoyPlan((9,), (DecoyState.ZERO,)).validate(2)
        with pytest.raises(PolicyError):
            DecoyPlan((2, 1), (DecoyState.ZERO, DecoyState.ONE)).validate(2)

    def test_insert_no_decoys_is_identity(self):
        secret = haar(2, 3)
        np.testing.assert_allclose(insert_decoys(secret, DecoyPlan()), secret)

    def test_insert_explicit_product(self):
        secret = np.array([1.0, 0.0])
        plan = DecoyPlan((2,), (DecoyState.PLUS_X,))
        got = insert_decoys(secret, plan)
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(got, [s, s, 0, 0])

    def test_insert_preserves_secret_block(self):
        secret = haar(2, 4)
        plan = DecoyPlan((1, 3), (DecoyState.MINUS_X, DecoyState.ONE))
        extended = insert_decoys(secret, plan)
        reg = QuantumRegister()
        ids = reg.alloc_state(extended)
        rho = reg.reduced_density([ids[1], ids[3]])  # slots 2 and 4
        assert trace_distance(rho.entries, pure_density(secret)) < 1e-12


# -- the attacker itself --------------------------------------------------------------


class TestEveTap:
    def test_probability_zero_never_touches(self):
        reg = QuantumRegister()
        ids = reg.alloc_state(haar(2, 5))
        before = reg.state_vector()
        assert eve_tap(reg, ids[0], EveModel.intercept_resend(0.0), RandomSource(1)) \
            is None
        assert fidelity(reg.state_vector(), before) == pytest.approx(1.0)

    def test_inactive_model_consumes_no_randomness(self):
        rng = RandomSource(2)
        reg = QuantumRegister()
        q = reg.alloc_qubit(0)
        eve_tap(reg, q, EveModel.off(), rng)
        assert rng.random() == RandomSource(2).random()

    def test_eigenstate_in_matching_basis_untouched(self):
        # force the X-basis branch: find a seed where the basis draw is X
        for seed in range(40):
            rng = RandomSource(seed)
            reg = QuantumRegister()
            q = reg.alloc_qubit(0)
            reg.project_single(q, "X", 0, remove=False)  # |+x>
            tap = eve_tap(reg, q, EveModel.intercept_resend(1.0), rng)
            assert tap is not None
            basis, bit = tap
            if basis == "X":
                assert bit == 0
                assert fidelity(reg.state_vector(), [1 / np.sqrt(2), 1 / np.sqrt(2)]) \
                    > 1 - 1e-12
                return
        pytest.fail("no X-basis draw in 40 seeds")

    def test_complementary_bases_randomize(self):
        # |0> measured in X then read out in Z: both outcomes equally likely
        reg = QuantumRegister()
        q = reg.alloc_qubit(0)
        for outcome in (0, 1):
            probe = reg.copy()
            p = probe.project_single(q, "X", outcome, remove=False)
            assert p == pytest.approx(0.5)
            np.testing.assert_allclose(
                probe.single_probabilities(q, "Z"), [0.5, 0.5], atol=1e-12
            )

    def test_invalid_model_rejected(self):
        with pytest.raises(PolicyError):
            EveModel("collective", 1.0)
        with pytest.raises(PolicyError):
            EveModel("intercept-resend", 1.5)


# -- verification without an attacker ---------------------------------------------------


class TestVerifyClean:
    def test_clean_channel_exact_by_branch_enumeration(self):
        # over every decoy state and every forced swap branch, the corrected
        # qubit is exactly the decoy state again: the expected report has
        # probability 1, so a clean channel can never flag
        for state, kind in itertools.product(DecoyState, BellKind):
            reg = QuantumRegister()
            (src,) = reg.alloc_state(state.vector)
            mu, nu = reg.alloc_bell_pair(BellKind.PHI_MINUS)
            prob = reg.project_bell(src, mu, kind)
            assert prob == pytest.approx(0.25, abs=1e-12)
            reg.apply_pauli(nu, CORRECTION_FOR_OUTCOME[kind])
            p_expected = float(
                reg.single_probabilities(nu, state.basis)[state.expected_bit]
            )
            assert p_expected == pytest.approx(1.0, abs=1e-12), (state, kind)

    @pytest.mark.parametrize("decoys,seeds", [(1, 30), (4, 30), (16, 8)])
    def test_zero_false_positives(self, decoys, seeds):
        for seed in range(seeds):
            run, plan = decoy_run(1, decoys, seed=seed)
            report = verify_decoys(run, plan)
            assert report.mismatches == 0 and report.verdict == "clean"

    def test_requires_completed_distribution(self):
        from cqss.errors import IncompleteRun

        rng = RandomSource(3)
        plan = DecoyPlan.random(2, 1, rng)
        policy = AccessPolicy.round_robin(2, 2, 2)
        run = setup(2, 2, 2, haar(2, 6), policy, rng, decoy_plan=plan)
        with pytest.raises(IncompleteRun):
            verify_decoys(run, plan)

    def test_requires_matching_plan(self):
        run, plan = decoy_run(1, 1, seed=9)
        other = DecoyPlan((1,), (DecoyState.ZERO,))
        if other == plan:
            other = DecoyPlan((1,), (DecoyState.ONE,))
        with pytest.raises(PolicyError):
            verify_decoys(run, other)

    def test_verification_messages_logged(self):
        run, plan = decoy_run(2, 2, seed=10)
        verify_decoys(run, plan)
        kinds = [m.payload.split()[0] for m in run.transcript.messages]
        assert kinds.count("decoy-positions") == 1
        assert kinds.count("decoy-open") == 2
        assert kinds.count("decoy-report") == 2


# -- detection statistics ------------------------------------------------------------------


def exact_detection_probability_single_decoy():
    """Exhaustive enumeration over decoy state, attacker basis and outcome,
    and swap branch: probability that the holder's report disagrees.

    Independent of the sampling code path: every branch is forced and
    weighted by its exact probability.
    """
    total = 0.0
    for state, eve_basis in itertools.product(DecoyState, ["Z", "X"]):
        weight_state = 1.0 / len(DecoyState) / 2.0  # uniform state and basis
        for eve_bit, swap_kind in itertools.product((0, 1), BellKind):
            reg = QuantumRegister()
            (src,) = reg.alloc_state(state.vector)
            mu, nu = reg.alloc_bell_pair(BellKind.PHI_MINUS)
            p_eve = float(reg.single_probabilities(nu, eve_basis)[eve_bit])
            if p_eve < 1e-15:
                continue
            reg.project_single(nu, eve_basis, eve_bit, remove=False)
            p_swap = float(reg.bell_probabilities(src, mu)[swap_kind.value])
            if p_swap < 1e-15:
                continue  # interception can zero out swap branches
            reg.project_bell(src, mu, swap_kind)
            reg.apply_pauli(nu, CORRECTION_FOR_OUTCOME[swap_kind])
            p_wrong = float(
                reg.single_probabilities(nu, state.basis)[1 - state.expected_bit]
            )
            total += weight_state * p_eve * p_swap * p_wrong
    return total


class TestDetectionStatistics:
    def test_exact_quarter_per_decoy(self):
        assert exact_detection_probability_single_decoy() == pytest.approx(
            0.25, abs=1e-12
        )

    def test_monte_carlo_matches_quarter(self):
        trials = 4000
        eve = EveModel.intercept_resend(1.0)
        detected = 0
        for seed in range(trials):
            run, plan = decoy_run(1, 1, seed=seed, eve=eve)
            if verify_decoys(run, plan).mismatches > 0:
                detected += 1
        sigma = np.sqrt(0.25 * 0.75 / trials)
        assert abs(detected / trials - 0.25) < 4 * sigma

    @pytest.mark.parametrize("decoys", [1, 2])
    def test_escape_curve_smoke(self, decoys):
        trials = 3000
        eve = EveModel.intercept_resend(1.0)
        escaped = 0
        for seed in range(trials):
            run, plan = decoy_run(1, decoys, seed=10_000 + seed, eve=eve)
            if verify_decoys(run, plan).clean:
                escaped += 1
        expected = 0.75**decoys
        sigma = np.sqrt(expected * (1 - expected) / trials)
        assert abs(escaped / trials - expected) < 4 * sigma

    def test_analytic_detection_monotone_in_decoys(self):
        values = [1 - 0.75**m for m in (1, 2, 4, 8)]
        assert values == sorted(values)

    def test_partial_interception_scales(self):
        # detection per decoy is p/4; at p = 0.5 one decoy detects ~ 1/8
        trials = 4000
        eve = EveModel.intercept_resend(0.5)
        detected = 0
        for seed in range(trials):
            run, plan = decoy_run(1, 1, seed=20_000 + seed, eve=eve)
            if verify_decoys(run, plan).mismatches > 0:
                detected += 1
        sigma = np.sqrt(0.125 * 0.875 / trials)
        assert abs(detected / trials - 0.125) < 4 * sigma


# -- sealing audit ----------------------------------------------------------------------------


class TestNoInformationAudit:
    def run_for_audit(self, width=3, seed=80):
        policy = AccessPolicy.round_robin(width, width, width)
        run = setup(width, width, width, haar(width, 81), policy, RandomSource(seed))
        run.distribute_all()
        return run

    def test_single_withheld_passes(self):
        run = self.run_for_audit()
        for index in (1, 2, 3):
            audit = no_information_audit(run, {index})
            assert audit.passed, audit

    def test_empty_set_distance_zero(self):
        run = self.run_for_audit(seed=82)
        audit = no_information_audit(run, set())
        assert audit.distance <= 1e-12

    def test_all_withheld_is_uniform(self):
        run = self.run_for_audit(seed=83)
        audit = no_information_audit(run, {1, 2, 3})
        assert audit.passed
        got = run.withheld_state({1, 2, 3})
        np.testing.assert_allclose(got.entries, np.eye(8) / 8, atol=1e-10)

    def test_audit_is_exact_not_statistical(self):
        # same audit from two different measurement histories agrees
        a = no_information_audit(self.run_for_audit(seed=84), {2})
        b = no_information_audit(self.run_for_audit(seed=85), {2})
        assert a.passed and b.passed
        assert a.distance < 1e-12 and b.distance < 1e-12


# -- controller-link variant -------------------------------------------------------------------


class TestControllerChannelCheck:
    def test_clean_channel_no_mismatches(self):
        report = controller_channel_check(32, EveModel.off(), master_seed=1)
        assert report.mismatches == 0

    def test_attacked_channel_detects(self):
        report = controller_channel_check(
            400, EveModel.intercept_resend(1.0), master_seed=2
        )
        sigma = np.sqrt(0.25 * 0.75 / 400)
        assert abs(report.mismatches / 400 - 0.25) < 4 * sigma
