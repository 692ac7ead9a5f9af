/** Query panel: the six built-in probes with inline validation so obviously
 * malformed probes never reach the server.
 */

export const PROBE_KINDS = [
  "username",
  "ip",
  "email",
  "keyword",
  "time_window",
  "geolocation",
] as const;

export type ProbeKind = (typeof PROBE_KINDS)[number];

export interface ProbeValidation {
  ok: boolean;
  error: string | null;
}

const IPV4 = /^(\d{1,3})\.(\d{1,3})\.(\d{1,3})\.(\d{1,3})$/;

export function validateProbe(kind: string, value: string): ProbeValidation {
  if (!(PROBE_KINDS as readonly string[]).includes(kind)) {
    return { ok: false, error: `Unknown probe kind "${kind}"` };
  }
  const trimmed = value.trim();
  if (trimmed === "") {
    return { ok: false, error: "Enter a value to search for" };
  }
  switch (kind as ProbeKind) {
    case "ip": {
      const m = IPV4.exec(trimmed);
      if (!m || m.slice(1).some((octet) => Number(octet) > 255)) {
        return { ok: false, error: "Not a valid IPv4 address" };
      }
      return { ok: true, error: null };
    }
    case "email":
      return trimmed.includes("@")
        ? { ok: true, error: null }
        : { ok: false, error: "An email address needs an @" };
    case "time_window": {
      const parts = trimmed.split(",").map((p) => p.trim());
      if (parts.length !== 2 || parts.some((p) => !/^\d+$/.test(p))) {
        return {
          ok: false,
          error: "Use two epoch seconds separated by a comma",
        };
      }
      if (Number(parts[0]) > Number(parts[1])) {
        return { ok: false, error: "Window start is after its end" };
      }
      return { ok: true, error: null };
    }
    default:
      return { ok: true, error: null };
  }
}
