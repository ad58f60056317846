/**
 * Thin typed client for the annotation service HTTP API.
 *
 * Every method either resolves with the parsed JSON body or rejects with
 * ApiRequestError carrying the server's stable error code, so callers can
 * branch on `code` the same way the CLI does.
 */

import type {
  ApiErrorBody,
  HitLabelRow,
  JobStatus,
  PlayerProfileDto,
  ShotConstraints,
  ShotLabelDto,
} from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiRequestError extends Error {
  readonly status: number;
  readonly code: string;
  readonly detail: unknown;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.status = status;
    this.code = body.code;
    this.detail = body.detail;
  }
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.base + path, init);
    const text = await response.text();
    const parsed = text ? JSON.parse(text) : null;
    if (!response.ok) {
      const fallback: ApiErrorBody = { code: "http-error", message: response.statusText };
      throw new ApiRequestError(response.status, (parsed as ApiErrorBody) ?? fallback);
    }
    return parsed as T;
  }

  listVideos(): Promise<unknown[]> {
    return this.request("GET", "/videos");
  }

  getPlayers(videoId: string): Promise<PlayerProfileDto[]> {
    return this.request("GET", `/videos/${videoId}/players`);
  }

  putNet(videoId: string, left: [number, number], right: [number, number], nearDeuceSide = "camera_right") {
    return this.request("PUT", `/videos/${videoId}/net`, {
      left,
      right,
      near_deuce_side: nearDeuceSide,
    });
  }

  getLabels(videoId: string): Promise<HitLabelRow[]> {
    return this.request("GET", `/videos/${videoId}/labels`);
  }

  validateShot(
    label: ShotLabelDto,
    profile: PlayerProfileDto,
    ordinal: number,
    isLast: boolean,
  ): Promise<ShotConstraints> {
    return this.request("POST", "/validate/shot", {
      label,
      profile,
      ordinal,
      is_last: isLast,
    });
  }

  putHitLabel(videoId: string, rallyId: string, hitIndex: number, label: ShotLabelDto) {
    return this.request<{ label: ShotLabelDto; label_source: string }>(
      "PUT",
      `/videos/${videoId}/rallies/${rallyId}/hits/${hitIndex}/label`,
      { label },
    );
  }

  postAnnotation(videoId: string, document: unknown) {
    return this.request("PUT", `/videos/${videoId}/annotations`, document);
  }

  startGeneration(videoId: string, model = "random", seed?: number): Promise<JobStatus> {
    return this.request("POST", `/videos/${videoId}/labels/generate`, { model, seed });
  }

  getJob(jobId: string): Promise<JobStatus> {
    return this.request("GET", `/jobs/${jobId}`);
  }

  frameUrl(videoId: string, frameIndex: number): string {
    return `${this.base}/videos/${videoId}/frames/${frameIndex}.jpg`;
  }
}
