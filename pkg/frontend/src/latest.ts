/** Latest-wins request scheduling.
 *
 * At most one request is in flight; parameter changes arriving during the
 * flight coalesce into exactly one follow-up carrying the newest params.
 * A result is displayed only when nothing newer is queued, so a stale
 * response can never overwrite a fresher one.
 */

export type Fetcher<P, R> = (params: P) => Promise<R>;

export class LatestWins<P, R> {
  private inFlight = false;
  private queued: { params: P } | null = null;

  constructor(
    private readonly fetcher: Fetcher<P, R>,
    private readonly onResult: (result: R, params: P) => void,
    private readonly onError: (error: unknown, params: P) => void = () => {},
  ) {}

  get pending(): boolean {
    return this.inFlight;
  }

  request(params: P): void {
    if (this.inFlight) {
      this.queued = { params };
      return;
    }
    void this.run(params);
  }

  private async run(params: P): Promise<void> {
    this.inFlight = true;
    let result: R | undefined;
    let failure: unknown = null;
    let failed = false;
    try {
      result = await this.fetcher(params);
    } catch (error) {
      failure = error;
      failed = true;
    }
    // Deliver only when this request is still the newest one.
    if (this.queued === null) {
      if (failed) {
        this.onError(failure, params);
      } else {
        this.onResult(result as R, params);
      }
    }
    this.inFlight = false;
    if (this.queued !== null) {
      const next = this.queued.params;
      this.queued = null;
      void this.run(next);
    }
  }
}
