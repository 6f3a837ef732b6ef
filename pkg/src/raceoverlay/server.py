"""WebSocket broadcast server linking the pipeline to operator consoles.

Each console connection gets a depth-1 latest-wins frame slot: a newer frame
replaces an unsent one, so slow consumers skip frames and never stall the
pipeline.  Control messages (hello, config, acks) go through a small
unbounded queue per connection because they must not be dropped.

Connection lifecycle: the client speaks first with a hello; the server
answers with its own hello and closes on a protocol version mismatch
(after answering, so the client can tell mismatch from a network failure).
Then the latest config update is sent, followed by frames.  Config updates
received from any console are applied if their revision is higher than the
current one, re-broadcast to every console, and acknowledged to the sender
with the revision now in force.
"""

from __future__ import annotations

import logging
import threading
from collections import deque
from typing import Callable, Iterable

from websockets.sync.server import ServerConnection, serve as ws_serve

from .errors import BindFailure, Malformed, MissingField, OverlayError
from .protocol import (
    PROTOCOL_VERSION,
    ROLE_PRODUCER,
    Ack,
    ConfigUpdate,
    FrameMessage,
    Hello,
    decode,
    encode,
)

logger = logging.getLogger(__name__)

_HELLO_TIMEOUT_S = 10.0


class _Slot:
    """Per-subscriber outbox: depth-1 frame slot plus a control queue."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._ready = threading.Condition(self._lock)
        self._frame: bytes | None = None
        self._control: deque[bytes] = deque()
        self._closed = False

    def put_frame(self, line: bytes) -> None:
        with self._ready:
            self._frame = line
            self._ready.notify()

    def put_control(self, line: bytes) -> None:
        with self._ready:
            self._control.append(line)
            self._ready.notify()

    def close(self) -> None:
        with self._ready:
            self._closed = True
            self._ready.notify()

    def next_line(self) -> bytes | None:
        """Block until something is sendable; control first, then newest frame."""
        with self._ready:
            while not self._closed and not self._control and self._frame is None:
                self._ready.wait()
            if self._control:
                return self._control.popleft()
            if self._frame is not None:
                line = self._frame
                self._frame = None
                return line
            return None


class FrameBus:
    """Fan-out point between the frame loop and subscriber connections."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._slots: set[_Slot] = set()

    def attach(self) -> _Slot:
        slot = _Slot()
        with self._lock:
            self._slots.add(slot)
        return slot

    def detach(self, slot: _Slot) -> None:
        with self._lock:
            self._slots.discard(slot)
        slot.close()

    def _snapshot(self) -> Iterable[_Slot]:
        with self._lock:
            return tuple(self._slots)

    def publish(self, message: FrameMessage) -> None:
        """Encode once and offer the newest frame to every subscriber."""
        line = encode(message)
        for slot in self._snapshot():
            slot.put_frame(line)

    def broadcast_control(self, line: bytes) -> None:
        for slot in self._snapshot():
            slot.put_control(line)

    def close_all(self) -> None:
        for slot in self._snapshot():
            slot.close()


class ConfigStore:
    """Atomic holder of the current overlay configuration."""

    def __init__(self, initial: ConfigUpdate) -> None:
        self._lock = threading.Lock()
        self._current = initial
        self._listeners: list[Callable[[ConfigUpdate], None]] = []

    def get(self) -> ConfigUpdate:
        with self._lock:
            return self._current

    def add_listener(self, callback: Callable[[ConfigUpdate], None]) -> None:
        with self._lock:
            self._listeners.append(callback)

    def apply(self, update: ConfigUpdate) -> bool:
        """Adopt the update iff its revision is higher; later revisions win."""
        with self._lock:
            if update.revision <= self._current.revision:
                return False
            self._current = update
            listeners = tuple(self._listeners)
        for callback in listeners:
            callback(update)
        return True


class _ConnectionRegistry:
    """Live connections, force-closable at shutdown.

    The websockets server runs one non-daemon thread per connection, so
    stop() must actively close their sockets or a connected console would
    keep the interpreter alive after the frame loop exits.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._connections: set[ServerConnection] = set()

    def add(self, connection: ServerConnection) -> None:
        with self._lock:
            self._connections.add(connection)

    def remove(self, connection: ServerConnection) -> None:
        with self._lock:
            self._connections.discard(connection)

    def close_all(self) -> None:
        with self._lock:
            connections = tuple(self._connections)
        for connection in connections:
            try:
                connection.close_socket()
            except Exception:  # already closed
                pass


class ServerHandle:
    """A running server; stop() shuts it down and releases the socket."""

    def __init__(
        self,
        server,
        thread: threading.Thread,
        bus: FrameBus,
        registry: _ConnectionRegistry,
        port: int,
    ) -> None:
        self._server = server
        self._thread = thread
        self._bus = bus
        self._registry = registry
        self.port = port

    def stop(self) -> None:
        self._bus.close_all()
        self._registry.close_all()
        self._server.shutdown()
        self._thread.join(timeout=5.0)


def _writer_loop(connection: ServerConnection, slot: _Slot) -> None:
    while True:
        line = slot.next_line()
        if line is None:
            return
        try:
            connection.send(line.decode("utf-8"))
        except Exception:
            return  # connection gone; the reader side tears the slot down


def _handle_connection(
    connection: ServerConnection, bus: FrameBus, config: ConfigStore
) -> None:
    try:
        raw = connection.recv(timeout=_HELLO_TIMEOUT_S)
    except Exception:
        return
    try:
        hello = decode(raw)
    except OverlayError as exc:
        logger.warning("rejecting connection with bad hello: %s", exc)
        return
    if not isinstance(hello, Hello):
        logger.warning("first message was %s, not hello", type(hello).__name__)
        return
    connection.send(encode(Hello(role=ROLE_PRODUCER)).decode("utf-8"))
    if hello.protocol_version != PROTOCOL_VERSION:
        logger.warning(
            "protocol version mismatch: ours %s, theirs %s",
            PROTOCOL_VERSION,
            hello.protocol_version,
        )
        return

    slot = bus.attach()
    slot.put_control(encode(config.get()))
    writer = threading.Thread(target=_writer_loop, args=(connection, slot), daemon=True)
    writer.start()
    try:
        for raw in connection:
            try:
                message = decode(raw)
            except (Malformed, MissingField, OverlayError) as exc:
                logger.warning("dropping bad message from console: %s", exc)
                continue
            if isinstance(message, ConfigUpdate):
                if config.apply(message):
                    bus.broadcast_control(encode(message))
                slot.put_control(encode(Ack(revision=config.get().revision)))
    except Exception as exc:
        logger.debug("connection closed: %s", exc)
    finally:
        bus.detach(slot)


def serve(address: str | tuple[str, int], bus: FrameBus, config: ConfigStore) -> ServerHandle:
    """Start the broadcast server; returns a handle with the bound port.

    Raises BindFailure when the listen address cannot be bound.  Per-connection
    failures only ever close that connection.
    """
    if isinstance(address, str):
        host, _, port_text = address.rpartition(":")
        if not host:
            raise BindFailure(f"listen address {address!r} must be host:port")
        try:
            port = int(port_text)
        except ValueError as exc:
            raise BindFailure(f"listen address {address!r} has a bad port") from exc
    else:
        host, port = address

    registry = _ConnectionRegistry()

    def handler(connection: ServerConnection) -> None:
        registry.add(connection)
        try:
            _handle_connection(connection, bus, config)
        finally:
            registry.remove(connection)

    try:
        # compression off: frames are tiny and latest-wins dropping relies on
        # transport backpressure, which permessage-deflate would mask
        server = ws_serve(handler, host, port, compression=None)
    except OSError as exc:
        raise BindFailure(f"cannot bind {host}:{port}: {exc}") from exc

    bound_port = server.socket.getsockname()[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True, name="overlay-server")
    thread.start()
    logger.info("serving on ws://%s:%d", host, bound_port)
    return ServerHandle(server, thread, bus, registry, bound_port)
