import { ApiClient, ApiError } from './api.js';
import { buildRunPanelModel, renderRunPanelHtml, RunPoller } from './runPanel.js';
import { StudioSession } from './session.js';
import type { WorkspaceDraft } from './workspace.js';

const api = new ApiClient('');
const session = new StudioSession();

const $ = <T extends HTMLElement>(selector: string): T => {
  const element = document.querySelector<T>(selector);
  if (!element) throw new Error(`missing element ${selector}`);
  return element;
};

function showError(message: string): void {
  const banner = $('#error-banner');
  banner.textContent = message;
  banner.classList.remove('hidden');
  setTimeout(() => banner.classList.add('hidden'), 6000);
}

async function guard<T>(work: () => Promise<T>): Promise<T | undefined> {
  try {
    return await work();
  } catch (error) {
    if (error instanceof ApiError) {
      showError(`${error.errorCode}: ${error.detail}`);
    } else {
      showError(String(error));
    }
    return undefined;
  }
}

// -- run panel ----------------------------------------------------------

async function viewRun(runId: string): Promise<void> {
  const panel = $('#run-panel');
  const handle = await guard(() => api.getRun(runId));
  if (!handle) {
    panel.innerHTML = '<p class="banner">run not found</p>';
    return;
  }
  session.watchRun(runId);
  const poller = new RunPoller(api, runId, (records, done) => {
    const model = buildRunPanelModel(runId, records, api);
    panel.innerHTML =
      renderRunPanelHtml(model) +
      (done ? '' : '<p class="banner">running&hellip;</p>') +
      (model.scoresNonDecreasing ? '' : '<p class="banner">warning: score regressed</p>');
  });
  await guard(() => poller.run());
  const finished = await guard(() => api.getRun(runId));
  if (finished?.result) {
    const importButton = document.createElement('button');
    importButton.textContent = 'import final prompt into workspace';
    importButton.onclick = () =>
      guard(async () => {
        const draft = await session.workspace.addFromRun(
          api,
          finished.result!.final_prompt.fragments,
          finished.result!.aspect_hints,
          runId,
        );
        renderWorkspace();
        return draft;
      });
    panel.appendChild(importButton);
  }
}

// -- workspace ----------------------------------------------------------

function tagChip(draft: WorkspaceDraft, tag: string, column: 'content' | 'style'): string {
  return (
    `<li class="chip" draggable="true" data-draft="${draft.id}" ` +
    `data-tag="${tag.replace(/"/g, '&quot;')}" data-column="${column}">${tag}</li>`
  );
}

function renderWorkspace(): void {
  const container = $('#workspace');
  container.innerHTML = session.workspace.drafts
    .map((draft) => {
      const content = draft.content.map((tag) => tagChip(draft, tag, 'content')).join('');
      const style = draft.style.map((tag) => tagChip(draft, tag, 'style')).join('');
      return (
        `<article class="draft" data-draft="${draft.id}">` +
        `<h3>${draft.id} <small>(${draft.origin})</small></h3>` +
        `<div class="columns">` +
        `<ul class="tags content" data-draft="${draft.id}" data-column="content">` +
        `<h4>content</h4>${content}</ul>` +
        `<ul class="tags style" data-draft="${draft.id}" data-column="style">` +
        `<h4>style</h4>${style}</ul>` +
        `</div></article>`
      );
    })
    .join('');
  wireDragAndDrop(container);
  const selects = [
    $('#fuse-style-draft') as HTMLSelectElement,
    $('#fuse-content-draft') as HTMLSelectElement,
    $('#generate-draft') as HTMLSelectElement,
    $('#modify-draft') as HTMLSelectElement,
  ];
  for (const select of selects) {
    select.innerHTML = session.workspace.drafts
      .map((draft) => `<option value="${draft.id}">${draft.id}</option>`)
      .join('');
  }
  const generateButton = $('#generate-button') as HTMLButtonElement;
  const selected = ($('#generate-draft') as HTMLSelectElement).value;
  generateButton.disabled = !selected || !session.workspace.canGenerate(selected);
}

function wireDragAndDrop(container: HTMLElement): void {
  container.querySelectorAll<HTMLElement>('.chip').forEach((chip) => {
    chip.addEventListener('dragstart', (event) => {
      event.dataTransfer?.setData(
        'application/json',
        JSON.stringify({ draft: chip.dataset.draft, tag: chip.dataset.tag }),
      );
    });
  });
  container.querySelectorAll<HTMLElement>('.tags').forEach((list) => {
    list.addEventListener('dragover', (event) => event.preventDefault());
    list.addEventListener('drop', (event) => {
      event.preventDefault();
      const raw = event.dataTransfer?.getData('application/json');
      if (!raw) return;
      const { draft, tag } = JSON.parse(raw) as { draft: string; tag: string };
      if (draft !== list.dataset.draft) return;
      session.workspace.moveTag(draft, tag, list.dataset.column as 'content' | 'style');
      renderWorkspace();
    });
  });
}

// -- gallery ------------------------------------------------------------

function renderGallery(): void {
  $('#gallery').innerHTML = session.gallery.entries
    .map(
      (entry, index) =>
        `<figure class="gallery-entry">` +
        `<img src="data:image/png;base64,${entry.imageB64}" alt="generation ${index}">` +
        `<figcaption>seed ${entry.seed}: ${[...entry.promptSnapshot.content, ...entry.promptSnapshot.style].join(', ')}</figcaption>` +
        `</figure>`,
    )
    .join('');
}

// -- wiring -------------------------------------------------------------

export function boot(): void {
  $('#view-run-form').addEventListener('submit', (event) => {
    event.preventDefault();
    const runId = ($('#run-id') as HTMLInputElement).value.trim();
    if (runId) void viewRun(runId);
  });

  $('#classify-form').addEventListener('submit', (event) => {
    event.preventDefault();
    const text = ($('#classify-input') as HTMLInputElement).value;
    const fragments = text.split(',').map((s) => s.trim()).filter(Boolean);
    if (!fragments.length) return;
    void guard(async () => {
      const classified = await api.classify(fragments);
      session.workspace.addClassified(classified, 'manual');
      renderWorkspace();
    });
  });

  $('#modify-form').addEventListener('submit', (event) => {
    event.preventDefault();
    const draftId = ($('#modify-draft') as HTMLSelectElement).value;
    const find = ($('#modify-find') as HTMLInputElement).value;
    const replace = ($('#modify-replace') as HTMLInputElement).value;
    if (!draftId || !find) return;
    void guard(async () => {
      await session.workspace.applyModify(api, draftId, find, replace);
      renderWorkspace();
    });
  });

  $('#fuse-form').addEventListener('submit', (event) => {
    event.preventDefault();
    const styleDraft = ($('#fuse-style-draft') as HTMLSelectElement).value;
    const contentDraft = ($('#fuse-content-draft') as HTMLSelectElement).value;
    if (!styleDraft || !contentDraft) return;
    void guard(async () => {
      await session.workspace.fuseDrafts(api, styleDraft, contentDraft);
      renderWorkspace();
    });
  });

  $('#generate-form').addEventListener('submit', (event) => {
    event.preventDefault();
    const draftId = ($('#generate-draft') as HTMLSelectElement).value;
    const seed = Number(($('#generate-seed') as HTMLInputElement).value) || 0;
    if (!draftId || !session.workspace.canGenerate(draftId)) return;
    void guard(async () => {
      const entry = await session.workspace.generate(api, draftId, seed, 512, 512);
      session.recordGeneration(entry);
      renderGallery();
    });
  });

  $('#generate-draft').addEventListener('change', renderWorkspace);
}

if (typeof document !== 'undefined' && document.getElementById('view-run-form')) {
  boot();
}
