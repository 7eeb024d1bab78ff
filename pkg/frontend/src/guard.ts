/**
 * Stale-response guard: every in-flight request carries a monotonically
 * increasing probe id; a response may render only if no newer response for
 * the same control has already rendered.
 */
export class LatestResponseGuard {
  private nextProbe = 1;
  private lastRendered = new Map<string, number>();

  issue(): number {
    return this.nextProbe++;
  }

  /** True if this probe is newer than everything rendered for the channel. */
  accept(channel: string, probeId: number): boolean {
    const latest = this.lastRendered.get(channel) ?? 0;
    if (probeId <= latest) return false;
    this.lastRendered.set(channel, probeId);
    return true;
  }

  latestFor(channel: string): number {
    return this.lastRendered.get(channel) ?? 0;
  }
}
