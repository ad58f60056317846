/** Payload types mirroring the annotation service's JSON schemas. */

export interface ShotLabelDto {
  court: string;
  side: string;
  shot_type: string;
  direction: string;
  formation: string;
  outcome: string;
  hitter?: string | null;
}

export interface PlayerProfileDto {
  role: string;
  description: string;
  handedness: string;
}

export interface FindingDto {
  severity: "error" | "warning";
  code: string;
  message: string;
  field?: string | null;
}

export interface ValidationReportDto {
  valid: boolean;
  findings: FindingDto[];
}

/** Response of POST /validate/shot: report plus the legal option sets. */
export interface ShotConstraints extends ValidationReportDto {
  legal_directions: string[];
  legal_formations: string[];
}

export interface HitLabelRow {
  rally_id: string;
  hit_index: number;
  frame_index: number;
  hitter: string;
  label: ShotLabelDto | null;
  event_token: string | null;
  label_source: "none" | "generated" | "confirmed";
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}

export interface JobStatus {
  job_id: string;
  kind: string;
  state: "queued" | "running" | "succeeded" | "failed";
  progress: number;
  message: string;
}
