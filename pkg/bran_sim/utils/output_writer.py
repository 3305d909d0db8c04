import csv
import io
import json
import math
from typing import List, TextIO

import numpy as np

from bran_sim.models.experiment import Cell, OutputFormat, ResultTable
from bran_sim.models.simulation import RequestTrace

RECORD_COLUMNS = ["req_id", "t_arrival", "t_mined", "t_confirmed", "t_service_start", "t_service_end", "rejected"]


def format_cell(value: Cell) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        # shortest round-trip repr keeps output byte-identical across runs
        return repr(value)
    return str(value)


def render_csv(table: ResultTable) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_cell(value) for value in row])
    return buffer.getvalue()


def render_json(table: ResultTable) -> str:
    def jsonable(value: Cell) -> Cell:
        if isinstance(value, float) and not math.isfinite(value):
            return None
        return value

    document = {name: [jsonable(row[position]) for row in table.rows] for position, name in enumerate(table.columns)}
    return json.dumps({"columns": table.columns, "data": document}, indent=2) + "\n"


def render(table: ResultTable, output_format: OutputFormat) -> str:
    return render_json(table) if output_format is OutputFormat.JSON else render_csv(table)


def _decimal(value: float) -> str:
    return np.format_float_positional(value, precision=12, unique=False, fractional=False, trim="-")


def write_records_csv(trace: RequestTrace, stream: TextIO) -> None:
    """Per-request timestamps in positional decimal, 12 significant digits; absent events are empty fields."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RECORD_COLUMNS)
    for record in trace.records():
        row: List[str] = [str(record.req_id)]
        for value in (record.t_arrival, record.t_mined, record.t_confirmed, record.t_service_start, record.t_service_end):
            row.append("" if value is None else _decimal(value))
        row.append("true" if record.rejected else "false")
        writer.writerow(row)
