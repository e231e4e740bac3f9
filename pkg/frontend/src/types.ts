// Wire types mirroring the session service JSON. The UI never recomputes
// physics from raw counts; it displays what the server sent.

export interface EstimateJson {
  value: number;
  uncertainty_stddev: number | null;
  uncertainty_stderr: number | null;
  method: string;
  section: string | null;
  sections_used: number;
  sections_dropped: number;
  exact: string | null;
}

export interface MdlBlock {
  status?: string;
  critical_l?: EstimateJson;
  lhs_at_quarter?: number;
}

export interface ChshBlock {
  status?: string;
  s?: EstimateJson;
  s_fixed_sign?: number;
  correlators?: Record<string, number>;
  critical_l?: number;
}

export interface AnalysisJson {
  counts: {
    grand_total: number;
    per_basis: Record<string, number>;
    cells: Record<string, number>;
  };
  probabilities: Record<string, number> | null;
  mdl: MdlBlock;
  chsh: ChshBlock;
}

export interface Snapshot {
  id: string;
  trials: number;
  coincidences: number;
  accepted_bits: { A: number; B: number };
  queued_bits: { A: number; B: number };
  analysis: AnalysisJson;
  predictability: number | null;
  predictability_status: string;
  status: "open" | "closed";
  version: number;
}

export type Bit = 0 | 1;
export type Role = "A" | "B" | "interleaved";
