/**
 * Job polling: repeatedly GET /v1/jobs/{id} until the job reaches a terminal
 * state, then stop. No request is issued after done/failed.
 */

import { Job, StudioApi } from "./api.js";

export interface PollOptions {
  intervalMs?: number;
  onUpdate?: (job: Job) => void;
}

const DEFAULT_INTERVAL_MS = 500;

export function isTerminal(job: Job): boolean {
  return job.state === "done" || job.state === "failed";
}

export class JobPoller {
  constructor(private readonly api: StudioApi) {}

  /** Resolves with the terminal job record. */
  async poll(jobId: string, options: PollOptions = {}): Promise<Job> {
    const interval = options.intervalMs ?? DEFAULT_INTERVAL_MS;
    for (;;) {
      const job = await this.api.job(jobId);
      options.onUpdate?.(job);
      if (isTerminal(job)) return job;
      await new Promise((resolve) => setTimeout(resolve, interval));
    }
  }
}

/** One-line status used by the job monitor list. */
export function describeJob(job: Job): string {
  if (job.state === "failed") return `${job.kind} ${job.id.slice(0, 8)}: failed: ${job.error}`;
  if (job.state === "done") return `${job.kind} ${job.id.slice(0, 8)}: done -> ${job.result_uri}`;
  return `${job.kind} ${job.id.slice(0, 8)}: ${job.state}`;
}
