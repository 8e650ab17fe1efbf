/** Status codes returned by every binding call; errors never throw across
 * the boundary. Names mirror the native library's error taxonomy. */
export enum StatusCode {
  Ok = 0,
  GroupError = 1,
  ShapeError = 2,
  DataError = 3,
  StateError = 4,
  RangeError = 5,
  FormatError = 6,
  TruncationError = 7,
  UnsupportedDtype = 8,
  IoError = 9,
  UsageError = 10,
  InternalError = 11,
}

const BY_NAME: Record<string, StatusCode> = {
  GroupError: StatusCode.GroupError,
  ShapeError: StatusCode.ShapeError,
  DataError: StatusCode.DataError,
  StateError: StatusCode.StateError,
  RangeError: StatusCode.RangeError,
  FormatError: StatusCode.FormatError,
  TruncationError: StatusCode.TruncationError,
  UnsupportedDtype: StatusCode.UnsupportedDtype,
  IoError: StatusCode.IoError,
  DimError: StatusCode.ShapeError,
};

/** Map one CLI failure (exit code + stderr diagnostics) to a status code.
 * The CLI prints `error: <ErrorName>: <detail>` on stderr. */
export function statusFromCli(exitCode: number, stderr: string): StatusCode {
  const match = stderr.match(/error: ([A-Za-z]+):/);
  if (match && BY_NAME[match[1]] !== undefined) {
    return BY_NAME[match[1]];
  }
  if (exitCode === 2) return StatusCode.UsageError;
  if (exitCode === 3) return StatusCode.IoError;
  if (exitCode === 4) return StatusCode.ShapeError;
  return StatusCode.InternalError;
}
