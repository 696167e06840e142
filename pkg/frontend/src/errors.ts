/** Raised when a CSV is missing columns the figure needs. */
export class SchemaMismatch extends Error {
  readonly file: string;
  readonly missing: string[];

  constructor(file: string, missing: string[]) {
    super(`schema mismatch in ${file}: missing columns ${missing.join(", ")}`);
    this.name = "SchemaMismatch";
    this.file = file;
    this.missing = missing;
  }
}

/** Raised for a CSV that parses but holds values a figure cannot use. */
export class BadValue extends Error {
  constructor(file: string, detail: string) {
    super(`bad value in ${file}: ${detail}`);
    this.name = "BadValue";
  }
}
