// Client-side mirror of the server's tag normalization: trim, lowercase,
// collapse internal whitespace. Returns null when nothing survives.

export function normalizeTag(raw: string): string | null {
  const out = raw.split(/\s+/).filter(Boolean).join(" ").toLowerCase();
  return out.length > 0 ? out : null;
}
