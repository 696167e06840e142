// The mirror image of the tiny slice of papaparse this package touches.
declare module "papaparse" {
  interface ParseResult {
    data: Record<string, string>[];
    errors: { message: string; row?: number }[];
    meta: { fields?: string[] };
  }
  interface ParseOptions {
    header?: boolean;
    skipEmptyLines?: boolean | "greedy";
  }
  function parse(input: string, options?: ParseOptions): ParseResult;
  const Papa: { parse: typeof parse };
  export default Papa;
}
