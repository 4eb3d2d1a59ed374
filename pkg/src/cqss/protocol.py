"""Controller-gated distribution of an entangled multi-qubit secret.

One dealer holds an N-qubit state carrying secret quantum information.  Each
qubit is handed to a player by entanglement swapping: the dealer shares a
singlet with the player, Bell-measures the secret qubit against her half,
and the player's half takes over the secret qubit's role, twisted by a Pauli
that depends on the two-bit measurement outcome.  Those two-bit records are
the protocol's lever: instead of telling the players, the dealer routes each
record to controllers, either

* classically, one-time padded by the shared outcome of Bell measurements on
  a pair of singlet links (``send_bits_classical``), or
* quantum mechanically, by preparing a fresh Bell pair in the recorded state
  and teleporting one half to each of two controllers, who must later
  cooperate in a joint Bell measurement to read it
  (``split_bell_between_controllers`` / ``joint_identify``).

Reconstruction applies the recorded corrections; it succeeds only if enough
controllers release their records to cover the qubits of at least
``threshold_k`` cooperating players.  Corrections are deferred to
reconstruction time: the per-branch algebra is unchanged because
corrections on distinct qubits commute, and deferral matches the fact that
players do not know the records until controllers release them.

Qubit indices, record indices and slot numbers are 1-based throughout this
module; tensor positions inside :mod:`cqss.qubits` are 0-based.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np

from .errors import (
    CapacityError,
    ControllerRefusal,
    IncompleteRun,
    InsufficientLinks,
    NotNormalized,
    PolicyError,
    ProtocolError,
    ResourceAccountingError,
)
from .qubits import (
    CORRECTION_FOR_OUTCOME,
    MAX_LIVE_QUBITS,
    NORM_ATOL,
    BellKind,
    DensityMatrix,
    Pauli,
    QuantumRegister,
    QubitId,
    RandomSource,
    insert_product_qubits,
)
from .security import DecoyPlan, DetectionReport, EveModel, eve_tap


def encode_bits(kind: BellKind) -> tuple[int, int]:
    """Two classical bits naming a Bell state."""
    return kind.bits


def decode_bits(bits: tuple[int, int]) -> BellKind:
    """Inverse of :func:`encode_bits`."""
    return BellKind.from_bits(*bits)


class Role(Enum):
    DEALER = "dealer"
    PLAYER = "player"
    CONTROLLER = "controller"


@dataclass(frozen=True)
class PartyId:
    role: Role
    index: int

    def __lt__(self, other: "PartyId") -> bool:
        return (self.role.value, self.index) < (other.role.value, other.index)

    def __str__(self) -> str:
        if self.role is Role.DEALER:
            return "dealer"
        return f"{self.role.value}-{self.index}"

    @classmethod
    def dealer(cls) -> "PartyId":
        return cls(Role.DEALER, 0)

    @classmethod
    def player(cls, index: int) -> "PartyId":
        return cls(Role.PLAYER, index)

    @classmethod
    def controller(cls, index: int) -> "PartyId":
        return cls(Role.CONTROLLER, index)


@dataclass
class EprLink:
    """One singlet shared between the dealer and a remote party."""

    dealer_qubit: QubitId
    remote_qubit: QubitId
    remote_party: PartyId
    purpose: str  # "player" | "controller"
    consumed: bool = False


@dataclass(frozen=True)
class ClassicalShare:
    """Two-bit record about one secret qubit and the controllers holding it."""

    bits: tuple[int, int]
    about_qubit: int
    holders: tuple[PartyId, ...]


@dataclass
class AccessPolicy:
    """Who holds what, and who has agreed to what.

    ``record_to_controller`` maps each record index to one controller
    (classical transport) or an ordered pair of controllers (split
    transport).  ``release`` marks each controller as releasing or
    withholding; ``cooperating_players`` lists the players willing to take
    part in reconstruction.
    """

    qubit_to_player: dict[int, PartyId]
    record_to_controller: dict[int, tuple[PartyId, ...]]
    threshold_k: int
    release: dict[PartyId, bool]
    cooperating_players: set[PartyId]

    def validate(self, n: int, m: int, width: int) -> None:
        players = {PartyId.player(i) for i in range(1, n + 1)}
        controllers = {PartyId.controller(i) for i in range(1, m + 1)}
        if sorted(self.qubit_to_player) != list(range(1, width + 1)):
            raise PolicyError(
                f"qubit_to_player must map exactly 1..{width}, got "
                f"{sorted(self.qubit_to_player)}"
            )
        assigned = set(self.qubit_to_player.values())
        if not assigned <= players:
            raise PolicyError("qubit_to_player references unknown players")
        if assigned != players:
            raise PolicyError(
                f"every one of the {n} players must hold at least one qubit "
                f"(width {width})"
            )
        if sorted(self.record_to_controller) != list(range(1, width + 1)):
            raise PolicyError(
                f"record_to_controller must map exactly 1..{width}, got "
                f"{sorted(self.record_to_controller)}"
            )
        holding = set()
        for i, holders in self.record_to_controller.items():
            if len(holders) not in (1, 2):
                raise PolicyError(
                    f"record_to_controller[{i}] must name one or two controllers"
                )
            if len(set(holders)) != len(holders):
                raise PolicyError(
                    f"record_to_controller[{i}] names the same controller twice"
                )
            if not set(holders) <= controllers:
                raise PolicyError(
                    f"record_to_controller[{i}] references unknown controllers"
                )
            holding |= set(holders)
        if holding != controllers:
            raise PolicyError(
                f"every one of the {m} controllers must hold at least one share"
            )
        if not 1 <= self.threshold_k <= n:
            raise PolicyError(f"threshold_k={self.threshold_k} outside 1..{n}")
        if set(self.release) != controllers:
            raise PolicyError("release must flag every controller exactly once")
        if not self.cooperating_players <= players:
            raise PolicyError("cooperating_players references unknown players")

    def qubits_held_by(self, player: PartyId) -> tuple[int, ...]:
        return tuple(
            sorted(i for i, p in self.qubit_to_player.items() if p == player)
        )

    @classmethod
    def round_robin(
        cls,
        n: int,
        m: int,
        width: int,
        threshold_k: int | None = None,
        split_all: bool = False,
    ) -> "AccessPolicy":
        """Convenience policy: qubits and records dealt out cyclically,
        everything released, everyone cooperating."""
        qubit_to_player = {
            i: PartyId.player((i - 1) % n + 1) for i in range(1, width + 1)
        }
        record_to_controller: dict[int, tuple[PartyId, ...]] = {}
        for i in range(1, width + 1):
            if split_all:
                a = (2 * (i - 1)) % m + 1
                b = (2 * (i - 1) + 1) % m + 1
                record_to_controller[i] = (PartyId.controller(a), PartyId.controller(b))
            else:
                record_to_controller[i] = (PartyId.controller((i - 1) % m + 1),)
        return cls(
            qubit_to_player=qubit_to_player,
            record_to_controller=record_to_controller,
            threshold_k=n if threshold_k is None else threshold_k,
            release={PartyId.controller(i): True for i in range(1, m + 1)},
            cooperating_players={PartyId.player(i) for i in range(1, n + 1)},
        )


@dataclass(frozen=True)
class Message:
    sender: str
    receiver: str
    payload: str

    def line(self) -> str:
        return f"{self.sender} -> {self.receiver}: {self.payload}"


def _bits_str(kind: BellKind) -> str:
    x, y = kind.bits
    return f"{x}{y}"


@dataclass
class Transcript:
    """Full classical record of one protocol run."""

    bell_record: dict[int, BellKind] = field(default_factory=dict)
    decoy_record: dict[int, BellKind] = field(default_factory=dict)
    epr_player: int = 0
    epr_controller: int = 0
    dealer_distribution_measurements: int = 0
    dealer_transport_measurements: int = 0
    controller_measurements: int = 0
    messages: list[Message] = field(default_factory=list)
    corrections: list[tuple[QubitId, Pauli]] = field(default_factory=list)

    @property
    def dealer_measurements(self) -> int:
        return (
            self.dealer_distribution_measurements
            + self.dealer_transport_measurements
        )

    def to_text(self) -> str:
        lines = ["transcript v1"]
        lines.append(
            "bell-record: "
            + " ".join(f"{i}:{_bits_str(k)}" for i, k in sorted(self.bell_record.items()))
        )
        if self.decoy_record:
            lines.append(
                "decoy-record: "
                + " ".join(
                    f"{s}:{_bits_str(k)}" for s, k in sorted(self.decoy_record.items())
                )
            )
        lines.append(f"epr-player: {self.epr_player}")
        lines.append(f"epr-controller: {self.epr_controller}")
        lines.append(
            f"dealer-measurements: {self.dealer_measurements} "
            f"(distribution {self.dealer_distribution_measurements}, "
            f"transport {self.dealer_transport_measurements})"
        )
        lines.append(f"controller-measurements: {self.controller_measurements}")
        lines.append(
            "corrections: "
            + " ".join(f"q{q}:{op.value}" for q, op in self.corrections)
        )
        lines.append("messages:")
        lines.extend("  " + msg.line() for msg in self.messages)
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Recovered:
    """Reconstruction succeeded for at least one authorized player set.

    ``state_vector`` is the full corrected state over all secret qubits in
    index order; it is present only when every record was available, which
    is the case where the original state is restored exactly.
    ``share_state`` is the corrected register restricted to the covered
    qubits (labelled by secret index).
    """

    state_vector: np.ndarray | None
    share_state: DensityMatrix
    covered_qubits: tuple[int, ...]
    players: tuple[PartyId, ...]


@dataclass(frozen=True)
class Sealed:
    reason: str


@dataclass(frozen=True)
class ResourceReport:
    """Consumed-resource counts; construction verifies the closed forms."""

    secret_width: int
    decoys: int
    epr_player: int
    epr_controller: int
    dealer_measurements: int
    controller_measurements: int
    decoy_overhead: int
    dealer_distribution_measurements: int
    dealer_transport_measurements: int

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (
            self.epr_player,
            self.epr_controller,
            self.dealer_measurements,
            self.controller_measurements,
            self.decoy_overhead,
        )

    def to_lines(self) -> list[str]:
        return [
            f"epr_player={self.epr_player}",
            f"epr_controller={self.epr_controller}",
            f"dealer_measurements={self.dealer_measurements}",
            f"dealer_distribution_measurements={self.dealer_distribution_measurements}",
            f"dealer_transport_measurements={self.dealer_transport_measurements}",
            f"controller_measurements={self.controller_measurements}",
            f"decoy_overhead={self.decoy_overhead}",
        ]


class ProtocolRun:
    """Mutable state of one protocol execution.

    Construct via :func:`setup`.  A run is single-threaded; parallel trials
    use independent runs with per-trial random sources.
    """

    def __init__(
        self,
        n: int,
        m: int,
        secret_width: int,
        secret: np.ndarray,
        policy: AccessPolicy,
        rng: RandomSource,
        decoy_plan: DecoyPlan | None = None,
        eve: EveModel | None = None,
    ):
        if n < 1 or m < 1 or secret_width < 1:
            raise PolicyError(
                f"need at least one player, one controller and one qubit "
                f"(got n={n}, m={m}, width={secret_width})"
            )
        secret = np.asarray(secret, dtype=complex).reshape(-1)
        if secret.size != 2**secret_width:
            raise PolicyError(
                f"secret has {secret.size} amplitudes, expected {2 ** secret_width}"
            )
        if abs(np.linalg.norm(secret) - 1.0) > NORM_ATOL:
            raise NotNormalized(f"secret norm {np.linalg.norm(secret)}")
        policy.validate(n, m, secret_width)
        plan = decoy_plan if decoy_plan is not None else DecoyPlan()
        plan.validate(secret_width)
        total = secret_width + plan.count
        if total + 2 > MAX_LIVE_QUBITS:
            raise CapacityError(
                f"distributing {total} qubits peaks at {total + 2} live qubits "
                f"(cap {MAX_LIVE_QUBITS})"
            )

        self.n = n
        self.m = m
        self.secret_width = secret_width
        self.secret = secret.copy()
        self.policy = policy
        self.rng = rng
        self.eve = eve if eve is not None else EveModel.off()
        self.decoy_plan = plan

        self.dealer = PartyId.dealer()
        self.players = [PartyId.player(i) for i in range(1, n + 1)]
        self.controllers = [PartyId.controller(i) for i in range(1, m + 1)]

        # Slot layout: decoys sit at the planned slots, secret qubits fill
        # the remaining slots in index order.
        decoy_slots = set(plan.placements)
        self._slot_of_secret: dict[int, int] = {}
        self._secret_of_slot: dict[int, int] = {}
        self._decoy_ordinal: dict[int, int] = {
            slot: j + 1 for j, slot in enumerate(plan.placements)
        }
        next_index = 1
        for slot in range(1, total + 1):
            if slot not in decoy_slots:
                self._slot_of_secret[next_index] = slot
                self._secret_of_slot[slot] = next_index
                next_index += 1

        initial = secret
        if plan.count:
            initial = insert_product_qubits(
                secret,
                [p - 1 for p in plan.placements],
                [s.vector for s in plan.states],
            )
        self.register = QuantumRegister()
        ids = self.register.alloc_state(initial, owner=self.dealer)
        self.slot_qubits: dict[int, QubitId] = {
            slot: ids[slot - 1] for slot in range(1, total + 1)
        }

        self.transcript = Transcript()
        self.links: list[EprLink] = []
        self.decoy_outcomes: dict[int, BellKind] = {}
        self.shares: dict[int, ClassicalShare] = {}
        self.decoded_bits: dict[int, tuple[int, int]] = {}
        self.split_holdings: dict[
            int, tuple[tuple[PartyId, QubitId], tuple[PartyId, QubitId]]
        ] = {}
        self.identified: dict[int, BellKind] = {}
        self.detection: DetectionReport | None = None
        self.decoys_verified = plan.count == 0
        self._undistributed = set(range(1, total + 1))
        self._controller_links_used = 0
        self._outcome: Recovered | Sealed | None = None

    # -- bookkeeping helpers ---------------------------------------------------

    @property
    def total_slots(self) -> int:
        return self.secret_width + self.decoy_plan.count

    @property
    def distribution_complete(self) -> bool:
        return not self._undistributed

    @property
    def transport_complete(self) -> bool:
        return all(i in self.shares for i in range(1, self.secret_width + 1))

    def log_message(self, sender: str, receiver: str, payload: str) -> None:
        self.transcript.messages.append(Message(sender, receiver, payload))

    @property
    def controller_link_budget(self) -> int:
        """Reserved dealer-controller singlets: two per record."""
        return 2 * self.secret_width

    def _controller_links(self, count: int) -> None:
        budget = self.controller_link_budget
        if self._controller_links_used + count > budget:
            raise InsufficientLinks(
                f"controller link budget {budget} exhausted "
                f"({self._controller_links_used} used, {count} requested)"
            )
        self._controller_links_used += count

    # -- distribution ------------------------------------------------------------

    def distribute_qubit(self, secret_index: int) -> BellKind:
        """Swap one secret qubit over to its assigned player.

        A fresh singlet link to the player is consumed; the dealer's Bell
        outcome is appended to the record list.  No correction is applied
        yet: the record first has to travel to controllers and come back.
        """
        if secret_index not in self._slot_of_secret:
            raise ProtocolError(
                f"secret index {secret_index} outside 1..{self.secret_width}"
            )
        return self._distribute_slot(self._slot_of_secret[secret_index])

    def distribute_all(self) -> None:
        """Distribute every slot (secret qubits and decoys) in slot order."""
        for slot in range(1, self.total_slots + 1):
            if slot in self._undistributed:
                self._distribute_slot(slot)

    def _distribute_slot(self, slot: int) -> BellKind:
        if slot not in self._undistributed:
            raise ProtocolError(f"slot {slot} already distributed")
        receiver = self._slot_receiver(slot)
        mu, nu = self.register.alloc_bell_pair(
            BellKind.PHI_MINUS, owners=(self.dealer, receiver)
        )
        link = EprLink(mu, nu, receiver, "player")
        self.links.append(link)
        self.transcript.epr_player += 1
        eve_tap(self.register, nu, self.eve, self.rng)
        source = self.slot_qubits[slot]
        kind = self.register.bell_measure(source, mu, self.rng)
        link.consumed = True
        self.transcript.dealer_distribution_measurements += 1
        if slot in self._secret_of_slot:
            self.transcript.bell_record[self._secret_of_slot[slot]] = kind
        else:
            self.decoy_outcomes[slot] = kind
            self.transcript.decoy_record[slot] = kind
        self.slot_qubits[slot] = nu
        self._undistributed.discard(slot)
        return kind

    def _slot_receiver(self, slot: int) -> PartyId:
        if slot in self._decoy_ordinal:
            j = self._decoy_ordinal[slot]
            return PartyId.player((j - 1) % self.n + 1)
        return self.policy.qubit_to_player[self._secret_of_slot[slot]]

    # -- record transport ----------------------------------------------------------

    def send_bits_classical(self, controller: PartyId, share: ClassicalShare) -> None:
        """Deliver a two-bit record to one controller, one-time padded.

        Dealer and controller consume a pair of singlet links; each
        Bell-measures its two halves, obtaining the same uniformly random
        two bits.  The dealer publicly announces the record XORed with her
        draw; only the controller can strip the pad.
        """
        if controller.role is not Role.CONTROLLER:
            raise PolicyError(f"{controller} is not a controller")
        index = share.about_qubit
        if share.holders != (controller,):
            raise PolicyError(
                f"share holders {share.holders} do not match {controller}"
            )
        if index not in self.transcript.bell_record:
            raise IncompleteRun(f"record {index} has not been produced yet")
        if index in self.shares:
            raise ProtocolError(f"record {index} already transported")
        self._controller_links(2)
        a1, b1 = self.register.alloc_bell_pair(
            BellKind.PHI_MINUS, owners=(self.dealer, controller)
        )
        a2, b2 = self.register.alloc_bell_pair(
            BellKind.PHI_MINUS, owners=(self.dealer, controller)
        )
        self.transcript.epr_controller += 2
        self.links.append(EprLink(a1, b1, controller, "controller", consumed=True))
        self.links.append(EprLink(a2, b2, controller, "controller", consumed=True))
        dealer_draw = self.register.bell_measure(a1, a2, self.rng)
        self.transcript.dealer_transport_measurements += 1
        controller_draw = self.register.bell_measure(b1, b2, self.rng)
        self.transcript.controller_measurements += 1
        x, y = share.bits
        xp, yp = dealer_draw.bits
        announced = (x ^ xp, y ^ yp)
        self.log_message(
            "dealer",
            "public",
            f"announce record={index} bits={announced[0]}{announced[1]}",
        )
        xc, yc = controller_draw.bits
        self.decoded_bits[index] = (announced[0] ^ xc, announced[1] ^ yc)
        self.shares[index] = share

    def split_bell_between_controllers(
        self, ca: PartyId, cb: PartyId, record_index: int
    ) -> None:
        """Encode a record as a fresh Bell pair and split it between two
        controllers, one teleported half each.

        Each half rides a singlet link; the dealer sends the teleportation
        correction to the receiving controller, who applies it immediately.
        Afterwards the pair jointly holds the Bell state named by the
        record, and neither half alone carries any of it.
        """
        if ca == cb:
            raise PolicyError("a split share needs two distinct controllers")
        for c in (ca, cb):
            if c.role is not Role.CONTROLLER:
                raise PolicyError(f"{c} is not a controller")
        if record_index not in self.transcript.bell_record:
            raise IncompleteRun(f"record {record_index} has not been produced yet")
        if record_index in self.shares:
            raise ProtocolError(f"record {record_index} already transported")
        kind = self.transcript.bell_record[record_index]
        g, h = self.register.alloc_bell_pair(kind, owners=(self.dealer, self.dealer))
        qa = self._teleport_to_controller(g, ca, record_index)
        qb = self._teleport_to_controller(h, cb, record_index)
        self.split_holdings[record_index] = ((ca, qa), (cb, qb))
        self.shares[record_index] = ClassicalShare(kind.bits, record_index, (ca, cb))

    def _teleport_to_controller(
        self, qubit: QubitId, controller: PartyId, record_index: int
    ) -> QubitId:
        self._controller_links(1)
        alpha, beta = self.register.alloc_bell_pair(
            BellKind.PHI_MINUS, owners=(self.dealer, controller)
        )
        self.transcript.epr_controller += 1
        self.links.append(EprLink(alpha, beta, controller, "controller", consumed=True))
        outcome = self.register.bell_measure(qubit, alpha, self.rng)
        self.transcript.dealer_transport_measurements += 1
        correction = CORRECTION_FOR_OUTCOME[outcome]
        self.log_message(
            "dealer",
            str(controller),
            f"correction record={record_index} pauli={correction.value}",
        )
        self.register.apply_pauli(beta, correction)
        return beta

    def transport_record(self, record_index: int) -> None:
        """Send one record the way the policy assigns it."""
        holders = self.policy.record_to_controller[record_index]
        if len(holders) == 1:
            kind = self.transcript.bell_record[record_index]
            share = ClassicalShare(kind.bits, record_index, holders)
            self.send_bits_classical(holders[0], share)
        else:
            self.split_bell_between_controllers(holders[0], holders[1], record_index)

    def transport_all(self) -> None:
        for index in range(1, self.secret_width + 1):
            if index not in self.shares:
                self.transport_record(index)

    # -- identification and reconstruction ------------------------------------------

    def joint_identify(
        self, ca: PartyId, cb: PartyId, record_index: int | None = None
    ) -> BellKind:
        """Two controllers read their split share by a joint Bell measurement.

        Refuses (raising :class:`ControllerRefusal`) when either controller
        withholds; a lone cooperative controller learns nothing, since its
        half alone is maximally mixed.
        """
        candidates = [
            i
            for i, ((pa, _), (pb, _)) in sorted(self.split_holdings.items())
            if {pa, pb} == {ca, cb} and i not in self.identified
        ]
        if record_index is None:
            if len(candidates) != 1:
                raise ProtocolError(
                    f"{ca} and {cb} hold {len(candidates)} unread split shares; "
                    f"pass record_index"
                )
            record_index = candidates[0]
        elif record_index not in candidates:
            raise ProtocolError(
                f"record {record_index} is not an unread split share of {ca}, {cb}"
            )
        if not (self.policy.release.get(ca) and self.policy.release.get(cb)):
            refusers = [c for c in (ca, cb) if not self.policy.release.get(c)]
            raise ControllerRefusal(
                f"{', '.join(str(c) for c in refusers)} withheld cooperation"
            )
        (pa, qa), (pb, qb) = self.split_holdings[record_index]
        kind = self.register.bell_measure(qa, qb, self.rng)
        self.transcript.controller_measurements += 1
        self.identified[record_index] = kind
        self.log_message(
            f"{pa}+{pb}",
            "public",
            f"identify record={record_index} bits={_bits_str(kind)}",
        )
        return kind

    def available_records(self) -> dict[int, BellKind]:
        """Records whose holders have all released, as the players see them."""
        available: dict[int, BellKind] = {}
        for index in sorted(self.shares):
            share = self.shares[index]
            if len(share.holders) == 1:
                holder = share.holders[0]
                if self.policy.release.get(holder):
                    bits = self.decoded_bits[index]
                    self.log_message(
                        str(holder),
                        "public",
                        f"release record={index} bits={bits[0]}{bits[1]}",
                    )
                    available[index] = decode_bits(bits)
            else:
                ca, cb = share.holders
                if self.policy.release.get(ca) and self.policy.release.get(cb):
                    if index in self.identified:
                        available[index] = self.identified[index]
                    else:
                        available[index] = self.joint_identify(ca, cb, index)
        return available

    def reconstruct(self) -> Recovered | Sealed:
        """Gather released records, check coverage, apply corrections.

        Succeeds when the released records cover every qubit held by some
        set of at least ``threshold_k`` cooperating players; the corrections
        are then applied to exactly those qubits.  Otherwise the secret
        stays sealed and the register is left untouched.
        """
        if self._outcome is not None:
            return self._outcome
        if not self.distribution_complete:
            raise IncompleteRun("reconstruction requires a completed distribution")
        if not self.decoys_verified:
            raise IncompleteRun("decoy verification is still pending")
        available = self.available_records()
        k = self.policy.threshold_k
        eligible = sorted(
            p
            for p in self.policy.cooperating_players
            if set(self.policy.qubits_held_by(p)) <= set(available)
        )
        if len(eligible) < k:
            self._outcome = Sealed(
                f"released records cover only {len(eligible)} cooperating "
                f"players (threshold {k})"
            )
            return self._outcome
        covered = sorted(
            {i for p in eligible for i in self.policy.qubits_held_by(p)}
        )
        for index in covered:
            qubit = self.slot_qubits[self._slot_of_secret[index]]
            op = CORRECTION_FOR_OUTCOME[available[index]]
            self.register.apply_pauli(qubit, op)
            self.transcript.corrections.append((qubit, op))
        share_ids = [self.slot_qubits[self._slot_of_secret[i]] for i in covered]
        reduced = self.register.reduced_density(share_ids)
        share_state = DensityMatrix(reduced.entries, tuple(covered))
        state_vector = None
        secret_ids = [
            self.slot_qubits[self._slot_of_secret[i]]
            for i in range(1, self.secret_width + 1)
        ]
        if len(covered) == self.secret_width and sorted(
            self.register.live_qubits()
        ) == sorted(secret_ids):
            state_vector = self.register.state_vector(order=secret_ids)
        self._outcome = Recovered(
            state_vector, share_state, tuple(covered), tuple(eligible)
        )
        return self._outcome

    # -- exact knowledge-state computation --------------------------------------------

    def withheld_state(self, withheld_indices: Iterable[int]) -> DensityMatrix:
        """Players' exact state when the given records never arrive.

        Computed by enumerating the measurement branches of a fresh
        distribution with exact probabilities - no sampling: non-withheld
        slots are forced to the outcomes actually recorded and corrected,
        withheld slots range over all four outcomes uncorrected.
        """
        if not self.distribution_complete:
            raise IncompleteRun("distribution must complete first")
        withheld = sorted(set(int(i) for i in withheld_indices))
        for i in withheld:
            if not 1 <= i <= self.secret_width:
                raise ProtocolError(f"withheld index {i} outside 1..{self.secret_width}")
        width = self.secret_width
        dim = 2**width
        acc = np.zeros((dim, dim), dtype=complex)
        total_weight = 0.0
        for combo in itertools.product(list(BellKind), repeat=len(withheld)):
            forced = dict(zip(withheld, combo))
            reg = QuantumRegister()
            ids = list(reg.alloc_state(self.secret))
            weight = 1.0
            for index in range(1, width + 1):
                mu, nu = reg.alloc_bell_pair(BellKind.PHI_MINUS)
                kind = forced.get(index, self.transcript.bell_record[index])
                weight *= reg.project_bell(ids[index - 1], mu, kind)
                ids[index - 1] = nu
                if index not in forced:
                    reg.apply_pauli(nu, CORRECTION_FOR_OUTCOME[kind])
            vec = reg.state_vector(order=ids)
            acc += weight * np.outer(vec, vec.conj())
            total_weight += weight
        return DensityMatrix(acc / total_weight, tuple(range(1, width + 1)))

    # -- accounting ---------------------------------------------------------------------

    def resource_report(self) -> ResourceReport:
        """Resource counts, checked against the closed-form expectations:
        N + M player links, 2N controller links, N + M distribution
        measurements, and one or two transport measurements per record for
        classical or split delivery respectively."""
        if not self.distribution_complete:
            raise IncompleteRun("distribution incomplete")
        missing = [
            i for i in range(1, self.secret_width + 1) if i not in self.shares
        ]
        if missing:
            raise IncompleteRun(f"records not transported yet: {missing}")
        width = self.secret_width
        decoys = self.decoy_plan.count
        t = self.transcript
        n_classical = sum(
            1 for h in self.policy.record_to_controller.values() if len(h) == 1
        )
        n_split = width - n_classical
        expectations = {
            "epr_player": (t.epr_player, width + decoys),
            "epr_controller": (t.epr_controller, 2 * width),
            "dealer_distribution_measurements": (
                t.dealer_distribution_measurements,
                width + decoys,
            ),
            "dealer_transport_measurements": (
                t.dealer_transport_measurements,
                n_classical + 2 * n_split,
            ),
            "controller_measurements": (
                t.controller_measurements,
                n_classical + len(self.identified),
            ),
        }
        bad = [
            f"{name}: counted {got}, expected {want}"
            for name, (got, want) in expectations.items()
            if got != want
        ]
        if bad:
            raise ResourceAccountingError("; ".join(bad))
        return ResourceReport(
            secret_width=width,
            decoys=decoys,
            epr_player=t.epr_player,
            epr_controller=t.epr_controller,
            dealer_measurements=t.dealer_measurements,
            controller_measurements=t.controller_measurements,
            decoy_overhead=decoys,
            dealer_distribution_measurements=t.dealer_distribution_measurements,
            dealer_transport_measurements=t.dealer_transport_measurements,
        )


def setup(
    n: int,
    m: int,
    secret_width: int,
    secret: np.ndarray,
    policy: AccessPolicy,
    rng: RandomSource,
    decoy_plan: DecoyPlan | None = None,
    eve: EveModel | None = None,
) -> ProtocolRun:
    """Validate the roster and policy and stage a run.

    Entangled links are allocated lazily, one per swap, so a run peaks at
    ``width + decoys + 2`` live qubits during distribution rather than
    holding all links at once.
    """
    return ProtocolRun(
        n, m, secret_width, secret, policy, rng, decoy_plan=decoy_plan, eve=eve
    )
