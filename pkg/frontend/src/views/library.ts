// Video library: paginated event browser with device/label/date filters.

import type { EventRecord, HubApi } from "../api.js";
import { clear, describeDetections, h, localTime, snapshotThumbnail } from "../dom.js";

const PAGE_SIZE = 12;

export class LibraryView {
  readonly root: HTMLElement;
  private listEl: HTMLElement;
  private detailEl: HTMLElement;
  private pageInfo: HTMLElement;
  private deviceInput: HTMLInputElement;
  private labelSelect: HTMLSelectElement;
  private dayInput: HTMLInputElement;
  // keyset pagination over (captured_at_ms, seq), newest first
  private pageStack: Array<number | undefined> = [undefined];
  private currentPage: EventRecord[] = [];

  constructor(private api: HubApi) {
    this.deviceInput = h("input", { type: "text", placeholder: "device id" }) as HTMLInputElement;
    this.labelSelect = h("select", {},
      h("option", { value: "" }, "any label"),
      h("option", { value: "person" }, "person"),
      h("option", { value: "car" }, "car"),
      h("option", { value: "animal" }, "animal"),
    ) as HTMLSelectElement;
    this.dayInput = h("input", { type: "date" }) as HTMLInputElement;
    this.listEl = h("div", { class: "cards" });
    this.detailEl = h("div", { class: "detail" });
    this.pageInfo = h("span", { class: "meta" }, "");
    this.root = h("section", {},
      h("h2", {}, "Video library"),
      h("div", { class: "row filters" },
        this.deviceInput, this.labelSelect, this.dayInput,
        h("button", { onclick: () => void this.applyFilters() }, "Filter"),
        h("button", { class: "secondary", onclick: () => void this.resetFilters() }, "Reset"),
      ),
      h("div", { class: "row" },
        h("button", { class: "secondary", onclick: () => void this.prevPage() }, "← Newer"),
        h("button", { class: "secondary", onclick: () => void this.nextPage() }, "Older →"),
        this.pageInfo,
      ),
      this.listEl,
      this.detailEl,
    );
  }

  setDayFilter(isoDate: string): void {
    this.dayInput.value = isoDate;
  }

  async start(): Promise<void> {
    await this.applyFilters();
  }

  private filterArgs(before?: number) {
    const args: Parameters<HubApi["queryEvents"]>[0] = {
      limit: PAGE_SIZE,
      order: "newest-first",
    };
    if (this.deviceInput.value.trim()) args.device_id = this.deviceInput.value.trim();
    if (this.labelSelect.value) args.label = this.labelSelect.value;
    if (this.dayInput.value) {
      const dayStart = new Date(this.dayInput.value + "T00:00:00").getTime();
      args.from_ms = dayStart;
      args.to_ms = dayStart + 86_400_000;
    }
    if (before !== undefined) {
      args.to_ms = args.to_ms !== undefined ? Math.min(args.to_ms, before) : before;
    }
    return args;
  }

  private async applyFilters(): Promise<void> {
    this.pageStack = [undefined];
    await this.loadPage();
  }

  private async resetFilters(): Promise<void> {
    this.deviceInput.value = "";
    this.labelSelect.value = "";
    this.dayInput.value = "";
    await this.applyFilters();
  }

  private async loadPage(): Promise<void> {
    const before = this.pageStack[this.pageStack.length - 1];
    this.currentPage = await this.api.queryEvents(this.filterArgs(before));
    this.render();
  }

  private async nextPage(): Promise<void> {
    if (this.currentPage.length < PAGE_SIZE) return; // already at the oldest page
    const last = this.currentPage[this.currentPage.length - 1];
    this.pageStack.push(last.captured_at_ms);
    await this.loadPage();
  }

  private async prevPage(): Promise<void> {
    if (this.pageStack.length <= 1) return;
    this.pageStack.pop();
    await this.loadPage();
  }

  private render(): void {
    clear(this.listEl);
    clear(this.detailEl);
    this.pageInfo.textContent = `page ${this.pageStack.length} · ${this.currentPage.length} events`;
    if (this.currentPage.length === 0) {
      this.listEl.append(h("p", { class: "empty" }, "No events match the filter."));
      return;
    }
    for (const record of this.currentPage) {
      this.listEl.append(h("article", {
        class: "card clickable",
        onclick: () => void this.showDetail(record),
      },
        h("strong", {}, describeDetections(record.detections)),
        h("div", { class: "meta" },
          `${localTime(record.captured_at_ms)} · device ${record.device_id} · seq ${record.seq}`),
      ));
    }
  }

  private async showDetail(record: EventRecord): Promise<void> {
    clear(this.detailEl);
    const body = h("div", { class: "card detail-card" },
      h("h3", {}, describeDetections(record.detections)),
      h("table", {},
        ...Object.entries({
          "event id": record.event_id,
          device: record.device_id,
          captured: localTime(record.captured_at_ms),
          received: localTime(record.received_at_ms),
          backend: record.detector_backend,
          "motion score": String(record.motion_score),
        }).map(([k, v]) => h("tr", {}, h("td", {}, k), h("td", {}, v))),
      ),
    );
    this.detailEl.append(body);
    if (record.snapshot_ref) {
      try {
        const thumb = snapshotThumbnail(await this.api.snapshot(record.event_id), 4);
        if (thumb) body.prepend(thumb);
      } catch {
        body.append(h("p", { class: "meta" }, "snapshot unavailable"));
      }
    }
  }
}
