import type { ClassifiedJson, GenerateRequest } from './types.js';

/** A generated image and the exact prompt snapshot + seed that produced it. */
export interface GalleryEntry {
  promptSnapshot: ClassifiedJson;
  seed: number;
  width: number;
  height: number;
  /** The serialized request body sent to /generate, byte-for-byte. */
  payload: string;
  imageB64: string;
  imageId: string;
}

/**
 * Canonical /generate request for a classified snapshot: content fragments
 * first, then style, fixed key order so serialization is reproducible.
 */
export function buildGenerateRequest(
  snapshot: ClassifiedJson,
  seed: number,
  width = 512,
  height = 512,
): GenerateRequest {
  return {
    prompt: [...snapshot.content, ...snapshot.style],
    seed,
    width,
    height,
  };
}

export function serializeRequest(request: GenerateRequest): string {
  return JSON.stringify(request);
}

/** Append-only list of generation attempts; prior entries are never dropped. */
export class Gallery {
  readonly entries: GalleryEntry[] = [];

  append(entry: GalleryEntry): void {
    this.entries.push(entry);
  }

  /** Re-derive the request payload from an entry's stored snapshot. */
  regeneratePayload(entry: GalleryEntry): string {
    return serializeRequest(
      buildGenerateRequest(entry.promptSnapshot, entry.seed, entry.width, entry.height),
    );
  }
}
