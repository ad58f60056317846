/**
 * Label review controller.
 *
 * The server owns the legality rules; this controller only queries them
 * (POST /validate/shot) and renders the result as option lists. A save goes
 * through the validated PUT route, and a rejected save never mutates the
 * displayed confirmed state: the draft keeps the user's edit, the confirmed
 * label stays whatever the server last accepted.
 */

import { ApiClient, ApiRequestError } from "./client";
import type { PlayerProfileDto, ShotConstraints, ShotLabelDto } from "./types";

export interface SaveRejection {
  code: string;
  message: string;
}

export interface HitContext {
  videoId: string;
  rallyId: string;
  hitIndex: number;
  ordinal: number;
  isLast: boolean;
  profile: PlayerProfileDto;
}

export class LabelReviewController {
  private readonly client: ApiClient;
  private readonly context: HitContext;

  /** Last server-accepted label, or null when nothing is confirmed yet. */
  confirmed: ShotLabelDto | null;
  /** The label being edited; starts as a copy of the confirmed one. */
  draft: ShotLabelDto;
  labelSource: "none" | "generated" | "confirmed";
  constraints: ShotConstraints | null = null;
  lastRejection: SaveRejection | null = null;

  constructor(
    client: ApiClient,
    context: HitContext,
    initial: ShotLabelDto,
    labelSource: "none" | "generated" | "confirmed" = "generated",
  ) {
    this.client = client;
    this.context = context;
    this.labelSource = labelSource;
    this.confirmed = labelSource === "confirmed" ? { ...initial } : null;
    this.draft = { ...initial };
  }

  /** Re-query the legal option sets for the current draft. */
  async refreshConstraints(): Promise<ShotConstraints> {
    this.constraints = await this.client.validateShot(
      this.draft,
      this.context.profile,
      this.context.ordinal,
      this.context.isLast,
    );
    return this.constraints;
  }

  /** Options for the direction control; empty until constraints are loaded. */
  directionOptions(): string[] {
    return this.constraints ? [...this.constraints.legal_directions] : [];
  }

  formationOptions(): string[] {
    return this.constraints ? [...this.constraints.legal_formations] : [];
  }

  async setField<K extends keyof ShotLabelDto>(field: K, value: ShotLabelDto[K]): Promise<void> {
    this.draft = { ...this.draft, [field]: value };
    // shot type, court, or side changes reshape the legal sets
    await this.refreshConstraints();
  }

  /**
   * Persist the draft. Resolves to null on success (draft becomes the
   * confirmed label) or to the server's rejection; the confirmed state is
   * untouched on rejection.
   */
  async save(): Promise<SaveRejection | null> {
    try {
      const result = await this.client.putHitLabel(
        this.context.videoId,
        this.context.rallyId,
        this.context.hitIndex,
        this.draft,
      );
      this.confirmed = { ...result.label };
      this.labelSource = "confirmed";
      this.lastRejection = null;
      return null;
    } catch (err) {
      if (err instanceof ApiRequestError) {
        this.lastRejection = { code: err.code, message: err.message };
        return this.lastRejection;
      }
      throw err;
    }
  }

  /** What the review page shows as authoritative: confirmed beats draft. */
  displayedLabel(): ShotLabelDto {
    return this.confirmed ?? this.draft;
  }
}
