import type { ApiClient } from './api.js';
import type { IterationJson } from './types.js';

/** One rendered optimization step: prompt, what changed, score, images. */
export interface StepView {
  step: number;
  promptFragments: string[];
  newFragments: Set<string>;
  scoreIn: number;
  scoreOut: number;
  imageUrl: string | null;
}

export interface RunPanelModel {
  runId: string;
  referenceUrl: string;
  steps: StepView[];
  scores: number[];
  scoresNonDecreasing: boolean;
}

const key = (fragment: string) => fragment.trim().replace(/\s+/g, ' ').toLowerCase();

export function buildRunPanelModel(
  runId: string,
  iterations: IterationJson[],
  api: ApiClient,
): RunPanelModel {
  const steps: StepView[] = iterations.map((record) => {
    const before = new Set(record.prompt_in.fragments.map(key));
    const added = record.prompt_out.fragments.filter((fragment) => !before.has(key(fragment)));
    return {
      step: record.step,
      promptFragments: [...record.prompt_out.fragments],
      newFragments: new Set(added.map(key)),
      scoreIn: record.score_in.reported,
      scoreOut: record.score_out.reported,
      imageUrl: record.generated_image ? api.stepImageUrl(runId, record.step) : null,
    };
  });
  const scores = steps.length ? [steps[0].scoreIn, ...steps.map((s) => s.scoreOut)] : [];
  const scoresNonDecreasing = scores.every((value, i) => i === 0 || value >= scores[i - 1]);
  return {
    runId,
    referenceUrl: api.referenceImageUrl(runId),
    steps,
    scores,
    scoresNonDecreasing,
  };
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

/** Inline SVG polyline of the score trace. */
export function renderScoreChartSvg(scores: number[], width = 240, height = 60): string {
  if (scores.length === 0) return '<svg class="score-chart"></svg>';
  const min = Math.min(...scores);
  const max = Math.max(...scores);
  const span = max - min || 1;
  const points = scores
    .map((value, i) => {
      const x = scores.length === 1 ? width / 2 : (i / (scores.length - 1)) * (width - 8) + 4;
      const y = height - 6 - ((value - min) / span) * (height - 12);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(' ');
  return (
    `<svg class="score-chart" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">` +
    `<polyline fill="none" stroke="currentColor" stroke-width="2" points="${points}"/></svg>`
  );
}

/** Side-by-side reference/generated view per step, new fragments bolded. */
export function renderRunPanelHtml(model: RunPanelModel): string {
  const rows = model.steps
    .map((step) => {
      const tags = step.promptFragments
        .map((fragment) => {
          const escaped = escapeHtml(fragment);
          return step.newFragments.has(key(fragment)) ? `<b>${escaped}</b>` : escaped;
        })
        .join(', ');
      const generated = step.imageUrl
        ? `<img class="generated" src="${step.imageUrl}" alt="step ${step.step}">`
        : '<span class="missing-image">no image</span>';
      return (
        `<section class="iteration" data-step="${step.step}">` +
        `<h3>Iteration ${step.step + 1}</h3>` +
        `<div class="pair">` +
        `<img class="reference" src="${model.referenceUrl}" alt="reference">` +
        generated +
        `</div>` +
        `<p class="prompt">${tags}</p>` +
        `<p class="score">${step.scoreIn.toFixed(2)} &rarr; ${step.scoreOut.toFixed(2)}</p>` +
        `</section>`
      );
    })
    .join('\n');
  return (
    `<div class="run-panel" data-run="${escapeHtml(model.runId)}">` +
    renderScoreChartSvg(model.scores) +
    rows +
    `</div>`
  );
}

/**
 * Polls the incremental iterations endpoint until the run finishes.
 *
 * Records arrive gap-free: the `since` cursor advances by exactly the
 * number of records received, so concatenated pages reproduce the run
 * history with no holes or duplicates.
 */
export class RunPoller {
  readonly records: IterationJson[] = [];
  private since = 0;

  constructor(
    private readonly api: ApiClient,
    private readonly runId: string,
    private readonly onUpdate: (records: IterationJson[], done: boolean) => void,
    private readonly intervalMs = 500,
    private readonly sleep: (ms: number) => Promise<void> = (ms) =>
      new Promise((resolve) => setTimeout(resolve, ms)),
  ) {}

  async run(): Promise<IterationJson[]> {
    for (;;) {
      const page = await this.api.getIterations(this.runId, this.since);
      if (page.iterations.length > 0) {
        this.records.push(...page.iterations);
        this.since = page.next_since;
        this.onUpdate([...this.records], page.done);
      }
      if (page.done && page.iterations.length === 0) {
        this.onUpdate([...this.records], true);
        return this.records;
      }
      if (!page.done) {
        await this.sleep(this.intervalMs);
      }
    }
  }
}
