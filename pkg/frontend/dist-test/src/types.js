/**
 * Wire types for the sitewise service. These mirror the JSON the service
 * emits; the UI never stores any of this beyond the current render.
 */
export {};
