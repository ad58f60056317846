export * from "./types";
export * from "./client";
export * from "./coords";
export * from "./viewState";
export * from "./labelReview";
