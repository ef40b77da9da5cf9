"""
Planner module: the ReAct loop.

Each turn takes one registry snapshot, assembles the prompt, asks the backend
for a completion and parses it into a thought and either a group of actions
or a final answer. Valid actions are handed to the dispatcher; their results
come back as Observation or Error entries carrying the action group. The
loop ends on a final answer, or at the turn cap with one forced finalize.

Every scratchpad append is mirrored on the event stream, in append order.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence

from reactor.backends.base import BackendRequest, PlannerBackend
from reactor.config import SessionConfig
from reactor.dispatcher.dispatcher import Dispatcher
from reactor.dispatcher.privacy import Attachment
from reactor.dispatcher.requests import DispatchHandle, DispatchRequest, DispatchResult, Outcome
from reactor.errors import BackendError, ContextOverflowError
from reactor.observability.notifier import NullNotifier, SessionNotifier
from reactor.planner.actions import Action
from reactor.planner.cost import CostLedger, PricingRates, record_tokens
from reactor.planner.grammar import PlannerOutput, parse_planner_output, render_call
from reactor.planner.prompt import BACKGROUND_HINT, assemble_prompt, capacity_hint
from reactor.planner.scratchpad import EntryKind, ScratchpadEntry
from reactor.planner.session import SessionState, SessionStatus
from reactor.planner.stream_parser import StreamParser
from reactor.registry.prompt import render_tool_prompt
from reactor.registry.registry import RegistrySnapshot, ToolRegistry
from reactor.registry.validation import ValidatedAction, ValidationFailure, validate_action


logger = logging.getLogger(__name__)

MALFORMED_PREFIX = "malformed planner output"
BACKEND_ERROR_PREFIX = "backend error"
BACKEND_INTERRUPTED_PREFIX = "backend interrupted"
CONTEXT_OVERFLOW_PREFIX = "context overflow"

# A call emitted while streaming, with its handle or the reason it was not dispatched.
Speculated = tuple[Action, DispatchHandle | ValidationFailure]


class Planner:
    """Drives sessions through the ReAct loop."""

    def __init__(
        self,
        registry: ToolRegistry,
        dispatcher: Dispatcher,
        backend: PlannerBackend,
        config: SessionConfig | None = None,
    ):
        """
        Initialize the planner.

        :param registry: Registry snapshotted at every turn boundary.
        :param dispatcher: Executes the actions.
        :param backend: Produces completions.
        :param config: Session limits, budget and pricing.
        """
        self.registry = registry
        self.dispatcher = dispatcher
        self.backend = backend
        self.config = config or SessionConfig()
        self._notifier: SessionNotifier = NullNotifier()

    @property
    def notifier(self) -> SessionNotifier:
        """Get the notifier that mirrors scratchpad appends."""
        return self._notifier

    @notifier.setter
    def notifier(self, value: SessionNotifier) -> None:
        """Set the notifier that mirrors scratchpad appends."""
        self._notifier = value

    def new_session(
        self,
        task: str,
        attachments: Iterable[Attachment] = (),
        session_id: str | None = None,
        max_turns: int | None = None,
    ) -> SessionState:
        """
        Create a session and store its attachments for page-scoped dispatch.

        :param task: Task text.
        :param attachments: Documents the tools may read page by page.
        :param session_id: Id to use; generated when None.
        :param max_turns: Override of the configured turn cap.
        """
        rates = PricingRates.of(self.config.prompt_rate, self.config.completion_rate)
        session = SessionState(
            task=task,
            attachments=list(attachments),
            max_turns=max_turns or self.config.max_turns,
            cost=CostLedger(rates),
        )
        if session_id is not None:
            session.session_id = session_id
        for attachment in session.attachments:
            self.dispatcher.attachments.put(session.session_id, attachment)
        return session

    def run(
        self,
        task: str,
        attachments: Iterable[Attachment] = (),
        session_id: str | None = None,
    ) -> SessionState:
        """Create a session and run it to the end."""
        return self.run_session(self.new_session(task, attachments, session_id))

    def run_session(self, session: SessionState) -> SessionState:
        """
        Run turns until a final answer or the turn cap, then finish the session.

        At the cap every pending call is awaited and the backend is asked once
        for its best final answer, whatever form that answer takes.
        """
        logger.info("Session %s started: %s", session.session_id, session.task[:80])
        while not session.is_terminal and session.status is not SessionStatus.FINALIZING:
            if session.turn >= session.max_turns:
                self._force_finalize(session)
                break
            self.run_turn(session)
            if session.status is SessionStatus.AWAITING_RESULTS:
                self.await_results(session)

        if session.status is SessionStatus.FINALIZING:
            session.transition(SessionStatus.DONE)
            logger.info(
                "Session %s done after %d turns, %s dollars",
                session.session_id,
                session.turn,
                session.cost.dollars,
            )
        else:
            logger.error("Session %s failed: %s", session.session_id, session.failure)
        self._abandon_pending(session)
        self.dispatcher.attachments.drop(session.session_id)
        return session

    def run_turn(self, session: SessionState) -> SessionState:
        """
        Run one planner turn: exactly one backend call.

        :return: The session, now awaiting results, finalizing, running (after
            malformed output) or failed.
        """
        if session.status is SessionStatus.AWAITING_RESULTS:
            self.await_results(session)
        if session.status is not SessionStatus.RUNNING:
            raise ValueError(f"cannot run a turn of a {session.status.value} session")
        if session.turn >= session.max_turns:
            raise ValueError(f"session {session.session_id} reached its {session.max_turns} turns")

        turn = session.turn
        group = f"g{turn}"
        hints = self._collect_background(session, turn)
        busy = self.registry.busy_tools()
        if busy:
            hints.append(capacity_hint(busy))

        snapshot = self.registry.snapshot()
        prompt = self._prompt(session, snapshot, hints)
        if prompt is None:
            return session

        request = BackendRequest(
            prompt,
            max_completion_tokens=self.config.max_completion_tokens,
            stream=self.config.stream,
        )
        if self.config.stream:
            output, dispatched = self._stream_turn(session, snapshot, request, group)
        else:
            output, dispatched = self._complete_turn(session, request, group)
        if output is None:
            return session

        session.advance_turn()
        if output.thought:
            self._append(session, EntryKind.THOUGHT, output.thought, turn)

        if self.config.stream:
            actions = [action for action, _ in dispatched]
        else:
            actions = list(output.actions)
        if output.final is not None and not actions:
            self._append(session, EntryKind.FINAL, output.final, turn)
            session.final_answer = output.final
            session.transition(SessionStatus.FINALIZING)
            return session

        if actions:
            speculated = [item for _, item in dispatched] if self.config.stream else None
            self._record_actions(session, snapshot, actions, turn, speculated)
        if output.is_malformed:
            self._append(session, EntryKind.ERROR, _malformed_message(output.error), turn)
        if any(
            handle.request.group == group and not handle.request.action.is_background
            for handle in session.pending
        ):
            session.transition(SessionStatus.AWAITING_RESULTS)
        return session

    def await_results(self, session: SessionState) -> list[DispatchResult]:
        """
        Wait for the blocking calls of the session and append their results.

        Background calls stay pending; they are collected at the next turn.
        """
        blocking = [h for h in session.pending if not h.request.action.is_background]
        results = []
        for handle in blocking:
            result = handle.wait()
            assert result is not None
            results.append(result)
            self._append_result(session, result, max(session.turn - 1, 0))
        session.pending = [h for h in session.pending if h not in blocking]
        if session.status is SessionStatus.AWAITING_RESULTS:
            session.transition(SessionStatus.RUNNING)
        return results

    def _complete_turn(
        self, session: SessionState, request: BackendRequest, group: str
    ) -> tuple[PlannerOutput | None, list[Speculated]]:
        try:
            completion = self.backend.complete(request)
        except BackendError as err:
            self._fail_on_backend(session, err)
            return None, []
        record_tokens(session.cost, completion.prompt_tokens, completion.completion_tokens)
        return parse_planner_output(completion.text, group), []

    def _stream_turn(
        self,
        session: SessionState,
        snapshot: RegistrySnapshot,
        request: BackendRequest,
        group: str,
    ) -> tuple[PlannerOutput | None, list[Speculated]]:
        """Stream the completion and dispatch every call as soon as it is complete."""
        parser = StreamParser(group)
        dispatched: list[Speculated] = []
        try:
            stream = self.backend.stream(request)
            for chunk in stream:
                for action in parser.feed(chunk):
                    dispatched.append((action, self._speculate(session, snapshot, action)))
        except BackendError as err:
            if not parser.text:
                self._fail_on_backend(session, err)
                return None, []
            logger.warning("Stream of session %s interrupted: %s", session.session_id, err)
            output = parser.abort(str(err))
            completion = stream.completion()
        else:
            remaining, output = parser.finish()
            for action in remaining:
                dispatched.append((action, self._speculate(session, snapshot, action)))
            completion = stream.completion()
        record_tokens(session.cost, completion.prompt_tokens, completion.completion_tokens)
        return output, dispatched

    def _speculate(
        self, session: SessionState, snapshot: RegistrySnapshot, action: Action
    ) -> DispatchHandle | ValidationFailure:
        checked = validate_action(action, snapshot)
        if isinstance(checked, ValidationFailure):
            return checked
        request = self.dispatcher.make_request(checked, session.session_id)
        (handle,) = self.dispatcher.submit_group([request])
        logger.debug("Dispatched %s of %s before the stream ended", action.tool, action.group)
        return handle

    def _record_actions(
        self,
        session: SessionState,
        snapshot: RegistrySnapshot,
        actions: Sequence[Action],
        turn: int,
        speculated: Iterable[DispatchHandle | ValidationFailure] | None,
    ) -> None:
        """Append the Action entries, then validation errors, then hand valid calls over."""
        for action in actions:
            self._append(session, EntryKind.ACTION, render_call(action), turn, action.group)

        checked: list[ValidatedAction | ValidationFailure | DispatchHandle]
        if speculated is None:
            checked = [validate_action(action, snapshot) for action in actions]
        else:
            checked = list(speculated)
        for item in checked:
            if isinstance(item, ValidationFailure):
                message = f"{item.tool}: {item.render()}"
                self._append(session, EntryKind.ERROR, message, turn, actions[0].group)

        if speculated is None:
            requests: list[DispatchRequest] = [
                self.dispatcher.make_request(item, session.session_id)
                for item in checked
                if isinstance(item, ValidatedAction)
            ]
            session.pending.extend(self.dispatcher.submit_group(requests))
        else:
            session.pending.extend(item for item in checked if isinstance(item, DispatchHandle))

    def _collect_background(self, session: SessionState, turn: int) -> list[str]:
        """Append finished background results; hint at the ones still running."""
        hints: list[str] = []
        if not session.pending:
            return hints
        if not all(handle.done() for handle in session.pending):
            for handle in session.pending:
                if not handle.done():
                    handle.wait(self.config.background_wait_seconds)
                    break
        finished = [handle for handle in session.pending if handle.done()]
        for handle in finished:
            self._append_result(session, handle.result, turn)
        session.pending = [handle for handle in session.pending if handle not in finished]
        if session.pending:
            hints.append(BACKGROUND_HINT)
        return hints

    def _prompt(
        self,
        session: SessionState,
        snapshot: RegistrySnapshot,
        hints: Sequence[str],
        suffix: str | None = None,
    ) -> str | None:
        try:
            prompt, _view = assemble_prompt(
                session.task,
                render_tool_prompt(snapshot, self.config.cost_hints),
                session.scratchpad,
                self.config.context_budget_tokens,
                attachments=session.attachments,
                hints=hints,
                verbatim_turns=self.config.verbatim_turns,
                suffix=suffix,
            )
        except ContextOverflowError as err:
            self._append(
                session, EntryKind.ERROR, f"{CONTEXT_OVERFLOW_PREFIX}: {err}", session.turn
            )
            session.fail(f"{CONTEXT_OVERFLOW_PREFIX}: {err}")
            return None
        return prompt

    def _force_finalize(self, session: SessionState) -> None:
        """Await everything pending, then take one last completion as the answer."""
        session.forced_finalize = True
        for handle in session.pending:
            handle.wait()
            self._append_result(session, handle.result, session.turn)
        session.pending = []

        snapshot = self.registry.snapshot()
        prompt = self._prompt(session, snapshot, (), suffix=self.config.forced_finalize_prompt)
        if prompt is None:
            return
        try:
            completion = self.backend.complete(
                BackendRequest(prompt, max_completion_tokens=self.config.max_completion_tokens)
            )
        except BackendError as err:
            self._fail_on_backend(session, err)
            return
        record_tokens(session.cost, completion.prompt_tokens, completion.completion_tokens)
        output = parse_planner_output(completion.text, f"g{session.turn}")
        answer = output.final if output.final is not None else completion.text.strip()
        logger.info("Session %s hit its turn cap; answer forced", session.session_id)
        self._append(session, EntryKind.FINAL, answer, session.turn)
        session.final_answer = answer
        session.transition(SessionStatus.FINALIZING)

    def _fail_on_backend(self, session: SessionState, err: BackendError) -> None:
        message = f"{BACKEND_ERROR_PREFIX}: {err}"
        self._append(session, EntryKind.ERROR, message, session.turn)
        session.fail(message)

    def _append_result(self, session: SessionState, result: DispatchResult, turn: int) -> None:
        rate = None
        descriptor = self.registry.snapshot().get(result.tool)
        if descriptor is not None:
            rate = descriptor.cost_per_1k_tokens
        session.cost.record_tool(result.tool, result.tokens, rate)
        kind, content = result_entry(result)
        self._append(session, kind, content, turn, result.group)

    def _append(
        self,
        session: SessionState,
        kind: EntryKind,
        content: str,
        turn: int,
        group: str | None = None,
    ) -> ScratchpadEntry:
        entry = session.scratchpad.append(ScratchpadEntry(kind, content, turn, group))
        self.notifier.send_entry_event(session.session_id, entry)
        return entry

    @staticmethod
    def _abandon_pending(session: SessionState) -> None:
        if session.pending:
            logger.info(
                "Session %s ended with %d calls still running",
                session.session_id,
                len(session.pending),
            )
            session.pending = []


def result_entry(result: DispatchResult) -> tuple[EntryKind, str]:
    """Scratchpad kind and content for a dispatch result."""
    if result.outcome is Outcome.OK:
        return EntryKind.OBSERVATION, f"{result.tool}: {result.text}"
    if result.outcome is Outcome.UNAVAILABLE:
        return EntryKind.OBSERVATION, f"{result.tool}: tool unavailable ({result.text})"
    labels = {
        Outcome.TIMEOUT: "timeout",
        Outcome.TOOL_ERROR: "tool error",
        Outcome.CAPACITY_EXHAUSTED: "capacity exhausted",
        Outcome.PRIVACY_VIOLATION: "privacy violation",
    }
    return EntryKind.ERROR, f"{result.tool}: {labels[result.outcome]}: {result.text}"


def _malformed_message(error: str | None) -> str:
    if error and error.startswith(BACKEND_INTERRUPTED_PREFIX):
        return error
    return f"{MALFORMED_PREFIX}: {error}" if error else MALFORMED_PREFIX
