import { Gallery } from './gallery.js';
import type { GalleryEntry } from './gallery.js';
import { Workspace } from './workspace.js';

/** Single-user browser session: watched runs, drafts, and the gallery. */
export class StudioSession {
  readonly activeRunIds: string[] = [];
  readonly workspace = new Workspace();
  readonly gallery = new Gallery();

  watchRun(runId: string): void {
    if (!this.activeRunIds.includes(runId)) {
      this.activeRunIds.push(runId);
    }
  }

  recordGeneration(entry: GalleryEntry): void {
    // Every gallery entry must preserve the snapshot that produced it.
    if (this.gallery.regeneratePayload(entry) !== entry.payload) {
      throw new Error('gallery entry snapshot does not reproduce its request payload');
    }
    this.gallery.append(entry);
  }
}
