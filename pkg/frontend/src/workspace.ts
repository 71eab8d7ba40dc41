import type { ApiClient } from './api.js';
import { buildGenerateRequest, serializeRequest } from './gallery.js';
import type { GalleryEntry } from './gallery.js';
import type { ClassifiedJson } from './types.js';

/** One classified prompt being edited; content and style tag columns. */
export interface WorkspaceDraft {
  id: string;
  content: string[];
  style: string[];
  origin: string;
}

const cloneClassified = (draft: WorkspaceDraft): ClassifiedJson => ({
  content: [...draft.content],
  style: [...draft.style],
});

/**
 * The prompt workspace. Tag normalization always round-trips through the
 * service's classify/modify/fuse endpoints; the only client-side change is
 * drag-to-reclassify, which moves a tag between columns without rewriting
 * it.
 */
export class Workspace {
  readonly drafts: WorkspaceDraft[] = [];
  private counter = 0;

  addClassified(classified: ClassifiedJson, origin = 'external'): WorkspaceDraft {
    const draft: WorkspaceDraft = {
      id: `draft-${++this.counter}`,
      content: [...classified.content],
      style: [...classified.style],
      origin,
    };
    this.drafts.push(draft);
    return draft;
  }

  getDraft(draftId: string): WorkspaceDraft {
    const draft = this.drafts.find((d) => d.id === draftId);
    if (!draft) throw new Error(`unknown draft ${draftId}`);
    return draft;
  }

  /** Import a run's final prompt, classified server-side (hints win). */
  async addFromRun(
    api: ApiClient,
    fragments: string[],
    aspectHints: Record<string, string>,
    origin: string,
  ): Promise<WorkspaceDraft> {
    const classified = await api.classify(fragments, aspectHints);
    return this.addClassified(classified, origin);
  }

  /** Drag-to-reclassify: move one tag between the two columns, in place. */
  moveTag(draftId: string, tag: string, to: 'content' | 'style'): void {
    const draft = this.getDraft(draftId);
    const from = to === 'content' ? draft.style : draft.content;
    const target = to === 'content' ? draft.content : draft.style;
    const index = from.indexOf(tag);
    if (index < 0) return;
    from.splice(index, 1);
    if (!target.includes(tag)) target.push(tag);
  }

  /** Find/replace through the service, per column so classes are kept. */
  async applyModify(
    api: ApiClient,
    draftId: string,
    find: string,
    replace: string,
  ): Promise<WorkspaceDraft> {
    const draft = this.getDraft(draftId);
    if (draft.content.length > 0) {
      const edited = await api.modify(draft.content, find, replace);
      draft.content = edited.fragments;
    }
    if (draft.style.length > 0) {
      const edited = await api.modify(draft.style, find, replace);
      draft.style = edited.fragments;
    }
    return draft;
  }

  /**
   * Fuse one draft's style with another's content via the service, then
   * classify the result using hints from the sources so the new draft's
   * columns match what went in. Pre-filled as a fresh draft.
   */
  async fuseDrafts(
    api: ApiClient,
    styleDraftId: string,
    contentDraftId: string,
  ): Promise<WorkspaceDraft> {
    const styleSource = cloneClassified(this.getDraft(styleDraftId));
    const contentSource = cloneClassified(this.getDraft(contentDraftId));
    const fused = await api.fuse(styleSource, contentSource);
    const hints: Record<string, string> = {};
    for (const tag of contentSource.content) hints[tag] = 'content';
    for (const tag of styleSource.style) hints[tag] = 'style';
    const classified = await api.classify(fused.fragments, hints);
    return this.addClassified(classified, `fused:${styleDraftId}+${contentDraftId}`);
  }

  canGenerate(draftId: string): boolean {
    const draft = this.getDraft(draftId);
    return draft.content.length + draft.style.length > 0;
  }

  /**
   * Generate an image for a draft and return the gallery entry recording
   * the exact snapshot, seed, and serialized request that produced it.
   */
  async generate(
    api: ApiClient,
    draftId: string,
    seed: number,
    width = 512,
    height = 512,
  ): Promise<GalleryEntry> {
    if (!this.canGenerate(draftId)) {
      throw new Error('cannot generate from an empty draft');
    }
    const snapshot = cloneClassified(this.getDraft(draftId));
    const request = buildGenerateRequest(snapshot, seed, width, height);
    const payload = serializeRequest(request);
    const response = await api.generate(request);
    return {
      promptSnapshot: snapshot,
      seed,
      width,
      height,
      payload,
      imageB64: response.image_b64,
      imageId: response.id,
    };
  }
}
