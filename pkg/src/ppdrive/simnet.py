"""In-process message fabric with a byte-exact transcript.

Security model: all parties are semi-honest. They follow the protocol and
may only inspect what reaches them, which is precisely what the transcript
records per recipient. Audits of who learned what are run against
``Transcript.received(party)``.

Every message is framed as a 4-byte length prefix plus a 1-byte tag
(``FRAME_OVERHEAD``); framing is counted in all byte totals.
"""

import csv
import enum
import hashlib
import io
import threading
import time
from collections import defaultdict, deque
from contextlib import contextmanager
from dataclasses import dataclass

FRAME_OVERHEAD = 5

PHASES = ("encrypt", "homomorphic", "decrypt")

METRIC_COLUMNS = ("run_id", "protocol", "key_bits", "m", "T", "n", "phase", "party", "messages", "bytes", "millis")


class Role(str, enum.Enum):
    INSURER = "insurer"
    DRIVER = "driver"


@dataclass(frozen=True, order=True)
class PartyId:
    role: Role
    index: int

    def __post_init__(self):
        if self.role is Role.INSURER and self.index != 0:
            raise ValueError("the insurer has index 0")
        if self.role is Role.DRIVER and self.index < 1:
            raise ValueError("driver indices start at 1")

    def __str__(self):
        return "I" if self.role is Role.INSURER else f"D{self.index}"


INSURER = PartyId(Role.INSURER, 0)


def driver_id(i):
    return PartyId(Role.DRIVER, i)


class Tag(enum.IntEnum):
    PUBLIC_KEY = 1
    NODE_CONTEXT = 2  # training: ancestor conditions of the node being expanded
    SUM_HOP = 3  # ring hop between drivers
    SUM_FINAL = 4  # last driver to insurer
    PATH_HEADER = 5  # path count and digit count, plaintext
    PATH = 6  # one path's digit ciphertexts plus its self-product ciphertext
    MATCH_DIFF = 7  # one permuted difference ciphertext
    MATCH_BATCH = 8  # all differences at once (benchmark mode)
    VERDICT = 9  # one byte


class ProtocolError(RuntimeError):
    pass


@dataclass(frozen=True)
class Message:
    sender: PartyId
    recipient: PartyId
    tag: Tag
    payload: bytes
    ciphertexts: int = 0
    channel: int = 0  # demultiplexing key for concurrent sums; not on the wire

    @property
    def size(self):
        return len(self.payload) + FRAME_OVERHEAD


class Transcript:
    def __init__(self):
        self.messages = []
        self.sent_bytes = defaultdict(int)
        self.recv_bytes = defaultdict(int)
        self.sent_messages = defaultdict(int)
        self.recv_messages = defaultdict(int)
        self.timers = defaultdict(float)  # (phase, party) -> seconds
        self.wall_seconds = 0.0
        self._lock = threading.Lock()

    def record(self, msg):
        with self._lock:
            self.messages.append(msg)
            self.sent_bytes[msg.sender] += msg.size
            self.recv_bytes[msg.recipient] += msg.size
            self.sent_messages[msg.sender] += 1
            self.recv_messages[msg.recipient] += 1

    @contextmanager
    def phase(self, name, party):
        if name not in PHASES:
            raise ValueError(f"unknown phase {name!r}")
        t0 = time.perf_counter()
        try:
            yield
        finally:
            dt = time.perf_counter() - t0
            with self._lock:
                self.timers[name, party] += dt

    def received(self, party):
        return [m for m in self.messages if m.recipient == party]

    def sent(self, party):
        return [m for m in self.messages if m.sender == party]

    def total_bytes(self):
        return sum(m.size for m in self.messages)

    def ciphertext_count(self, sender=None, recipient=None, tags=None):
        return sum(
            m.ciphertexts
            for m in self.messages
            if (sender is None or m.sender == sender)
            and (recipient is None or m.recipient == recipient)
            and (tags is None or m.tag in tags)
        )

    def digest(self):
        """Hash of the ordered message log; timings are not included."""
        h = hashlib.sha256()
        for m in self.messages:
            h.update(f"{m.sender}>{m.recipient}:{int(m.tag)}:{m.ciphertexts}:{len(m.payload)}|".encode())
            h.update(m.payload)
        return h.hexdigest()


class Network:
    """Registered parties exchange messages through per-party inboxes.

    ``recv`` pops the oldest queued message for ``(tag, channel)``; sending
    to an unregistered party or using a tag outside ``Tag`` is an error.
    """

    def __init__(self, parties=(), transcript=None):
        self.transcript = transcript if transcript is not None else Transcript()
        self._inboxes = {}
        self._lock = threading.Lock()
        for p in parties:
            self.register(p)

    def register(self, party):
        if party in self._inboxes:
            raise ValueError(f"party {party} already registered")
        self._inboxes[party] = defaultdict(deque)

    @property
    def parties(self):
        return list(self._inboxes)

    def send(self, sender, recipient, tag, payload, ciphertexts=0, channel=0):
        if not isinstance(tag, Tag):
            raise ProtocolError(f"tag {tag!r} is not a protocol tag")
        if sender not in self._inboxes:
            raise ProtocolError(f"unknown sender {sender}")
        if recipient not in self._inboxes:
            raise ProtocolError(f"unknown recipient {recipient}")
        msg = Message(sender, recipient, tag, bytes(payload), ciphertexts, channel)
        self.transcript.record(msg)
        with self._lock:
            self._inboxes[recipient][tag, channel].append(msg)
        return msg

    def broadcast(self, sender, recipients, tag, payload, ciphertexts=0):
        for r in recipients:
            self.send(sender, r, tag, payload, ciphertexts)

    def recv(self, party, tag, channel=0):
        with self._lock:
            queue = self._inboxes[party][tag, channel]
            if not queue:
                raise ProtocolError(f"{party} has no pending {tag.name} message on channel {channel}")
            return queue.popleft()

    def pending(self, party):
        with self._lock:
            return sum(len(q) for q in self._inboxes[party].values())


def run_protocol(actors, script):
    """Run ``script(network)`` over a fresh network of ``actors``.

    Returns ``(transcript, output)``. The wall-clock time of the whole run
    is stored on the transcript.
    """
    net = Network(actors)
    t0 = time.perf_counter()
    out = script(net) if script is not None else None
    net.transcript.wall_seconds = time.perf_counter() - t0
    return net.transcript, out


# -- reporting ------------------------------------------------------------


@dataclass(frozen=True)
class MetricRow:
    phase: str
    party: str
    messages: int
    bytes: int
    millis: float


def _group(party):
    return "insurer" if party.role is Role.INSURER else "drivers"


def transcript_report(t):
    """Per-phase, per-party-group rows.

    Crypto phases carry only time. The ``total`` row of each group carries
    the messages and bytes that group sent; its time is the sum of the
    group's phase times, except for ``all`` where it is the wall clock.
    """
    timers = defaultdict(float)
    for (phase, party), secs in t.timers.items():
        timers[phase, _group(party)] += secs
    sent_msgs, sent_bytes = defaultdict(int), defaultdict(int)
    for m in t.messages:
        sent_msgs[_group(m.sender)] += 1
        sent_bytes[_group(m.sender)] += m.size
    rows = []
    for group in ("insurer", "drivers"):
        for phase in PHASES:
            rows.append(MetricRow(phase, group, 0, 0, timers[phase, group] * 1e3))
        rows.append(MetricRow(
            "total", group, sent_msgs[group], sent_bytes[group],
            sum(timers[p, group] for p in PHASES) * 1e3,
        ))
    rows.append(MetricRow("total", "all", len(t.messages), t.total_bytes(), t.wall_seconds * 1e3))
    return rows


def summary_row(t):
    return transcript_report(t)[-1]


def metrics_to_csv(rows):
    """Rows are mappings keyed by ``METRIC_COLUMNS``."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=METRIC_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{r[k]:.3f}" if k == "millis" else r[k]) for k in METRIC_COLUMNS})
    return buf.getvalue()
