"""This module contains code related to live objects."""
from __future__ import annotations

from types import TracebackType
from typing import Any
from typing import Callable
from typing import Dict
from typing import List

import attr
import click
from _neighcnn.config import hookimpl
from _neighcnn.console import console
from _neighcnn.losses import LossComponent
from _neighcnn.parameters import TRAINING_COMMANDS
from _neighcnn.session import Session
from _neighcnn.shared import get_first_non_none_value
from _neighcnn.trainer import EpochRecord
from rich.box import ROUNDED
from rich.live import Live
from rich.style import Style
from rich.table import Table
from rich.text import Text


@hookimpl
def neighcnn_extend_command_line_interface(cli: click.Group) -> None:
    """Extend command line interface."""
    additional_parameters = [
        click.Option(
            ["--n-entries-in-table"],
            default=None,
            help="How many epochs to display in the table during training. The final "
            "table shows all epochs. [dim]\\[default: 15][/]",
        ),
    ]
    for command in TRAINING_COMMANDS:
        cli.commands[command].params.extend(additional_parameters)


@hookimpl
def neighcnn_parse_config(
    config: dict[str, Any],
    config_from_cli: dict[str, Any],
    config_from_file: dict[str, Any],
) -> None:
    """Parse the configuration."""
    config["n_entries_in_table"] = get_first_non_none_value(
        config_from_cli,
        config_from_file,
        key="n_entries_in_table",
        default=15,
        callback=_parse_n_entries_in_table,
    )


def _parse_n_entries_in_table(value: int | str | None) -> int | None:
    """Parse how many entries should be displayed in the table during training.

    Examples
    --------
    >>> _parse_n_entries_in_table("3")
    3
    >>> _parse_n_entries_in_table("all")
    1000000
    >>> _parse_n_entries_in_table(None) is None
    True

    """
    if value in ["none", "None", None, ""]:
        out = None
    elif isinstance(value, int) and value >= 1:
        out = value
    elif isinstance(value, str) and value.isdigit() and int(value) >= 1:
        out = int(value)
    elif value == "all":
        out = 1_000_000
    else:
        raise ValueError(
            "'n_entries_in_table' can either be 'all' or an integer bigger than zero."
        )
    return out


@hookimpl
def neighcnn_post_parse(config: dict[str, Any]) -> None:
    """Register the live manager."""
    config["pm"].register(LiveManager(), "live_manager")


@hookimpl
def neighcnn_unconfigure(session: Session) -> None:
    """Stop a live display which is still running."""
    live_manager = session.config["pm"].get_plugin("live_manager")
    if live_manager is not None and live_manager.is_started:
        live_manager.stop()


@attr.s(eq=False)
class LiveManager:
    """A class for live displays during a session.

    The renderable is not updated automatically. Epochs last long enough that a refresh
    after every epoch or batch suffices, and no thread competes with the training for
    the console.

    """

    _live = attr.ib(
        factory=lambda: Live(renderable=None, console=console, auto_refresh=False)
    )

    def start(self) -> None:
        self._live.start()

    def stop(self, transient: bool | None = None) -> None:
        if transient is not None:
            self._live.transient = transient
        self._live.stop()

    def update(self, *args: Any, **kwargs: Any) -> None:
        self._live.update(*args, **kwargs)
        self._live.refresh()

    @property
    def is_started(self) -> bool:
        return self._live.is_started


@attr.s(eq=False, kw_only=True)
class LiveTraining:
    """A class for managing the table displaying the progress of a training.

    Use it as a context manager and pass :attr:`callbacks` to
    :func:`~_neighcnn.trainer.train`. With ``verbose == 0``, nothing is displayed.

    """

    live_manager = attr.ib(type=LiveManager)
    verbose = attr.ib(default=1, type=int)
    n_entries_in_table = attr.ib(default=15, type=int)
    title = attr.ib(default=None)
    _records = attr.ib(factory=list, type=List[EpochRecord])
    _batch = attr.ib(factory=dict, type=Dict[str, Any])

    @classmethod
    def from_session(cls, session: Session, title: str | None = None) -> LiveTraining:
        live_manager = session.config["pm"].get_plugin("live_manager")
        return cls(
            live_manager=live_manager,
            verbose=session.config["verbose"],
            n_entries_in_table=session.config["n_entries_in_table"] or 1_000_000,
            title=title,
        )

    @property
    def callbacks(self) -> dict[str, Callable[..., None]]:
        return {"on_epoch_end": self.on_epoch_end, "on_batch_end": self.on_batch_end}

    @property
    def records(self) -> list[EpochRecord]:
        return list(self._records)

    def __enter__(self) -> LiveTraining:
        if self.verbose >= 1:
            self.live_manager.start()
            self._update_table()
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_value: BaseException | None,
        traceback: TracebackType | None,
    ) -> None:
        if self.verbose < 1:
            return
        self._flush()

    def _flush(self) -> None:
        """Replace the live table with a complete one."""
        self.live_manager.stop(transient=True)
        table = self._generate_table(reduce_table=False, add_caption=False)
        if table is not None:
            console.print(table)

    def on_train_start(self, title: str) -> None:
        """Start a new table for the next training of an experiment."""
        if self.verbose >= 1 and self._records:
            self._flush()
            self.live_manager.start()
        self.title = title
        self._records = []
        self._batch = {}
        if self.verbose >= 1:
            self._update_table()

    def on_epoch_end(self, record: EpochRecord) -> None:
        self._records.append(record)
        self._batch = {}
        if self.verbose >= 1:
            self._update_table()

    def on_batch_end(self, epoch: int, batch: int, loss: float) -> None:
        self._batch = {"epoch": epoch, "batch": batch, "loss": loss}
        if self.verbose >= 2:
            console.print(f"Epoch {epoch}, batch {batch}: loss {loss:.6g}")
            self._update_table()

    def _components(self) -> list[LossComponent]:
        names = {name for record in self._records for name in record.components}
        return [component for component in LossComponent if component.value in names]

    def _generate_table(self, reduce_table: bool, add_caption: bool) -> Table | None:
        """Generate the table with one row per completed epoch.

        While the training runs, only the last epochs are shown.

        """
        records = self._records
        if reduce_table:
            records = records[-self.n_entries_in_table :]

        if add_caption and self._batch:
            caption_kwargs = {
                "caption": Text(
                    f"Epoch {self._batch['epoch']}, batch {self._batch['batch']}",
                    style=Style(dim=True, italic=False),
                ),
                "caption_justify": "right",
                "caption_style": None,
            }
        else:
            caption_kwargs = {}

        components = self._components()
        table = Table(title=self.title, box=ROUNDED, **caption_kwargs)
        table.add_column("Epoch", justify="right")
        table.add_column("Train loss", justify="right")
        table.add_column("Validation loss", justify="right")
        for component in components:
            table.add_column(component.value.capitalize(), justify="right")
        table.add_column("Time", justify="right")
        table.add_column("Best")

        for record in records:
            table.add_row(
                str(record.epoch),
                f"{record.train_loss:.6g}",
                f"{record.validation_loss:.6g}",
                *(f"{record.components[c.value]:.6g}" for c in components),
                f"{record.wall_time:.1f}s",
                Text("*", style="best") if record.is_best else "",
            )

        if not table.rows and not self._batch:
            table = None

        return table

    def _update_table(self) -> None:
        table = self._generate_table(reduce_table=True, add_caption=True)
        self.live_manager.update(table if table is not None else "")
