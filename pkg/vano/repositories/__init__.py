from vano.repositories.run_repository import RunRepository, append_csv_row, read_csv_rows

__all__ = ["RunRepository", "append_csv_row", "read_csv_rows"]
