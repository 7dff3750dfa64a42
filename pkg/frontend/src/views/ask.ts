// Ask console: free text in, rendered answer out; report intents also show
// the summary as a table with a jump into the library.

import { ApiError, type Answer, type HubApi, type Summary } from "../api.js";
import { h, localTime } from "../dom.js";

export class AskView {
  readonly root: HTMLElement;
  private input: HTMLInputElement;
  private output: HTMLElement;

  constructor(private api: HubApi, private openLibraryForDay?: (isoDate: string) => void) {
    this.input = h("input", {
      type: "text",
      placeholder: 'try "what is happening at the door"',
      onkeydown: (ev) => {
        if ((ev as KeyboardEvent).key === "Enter") void this.submit();
      },
    }) as HTMLInputElement;
    this.output = h("div", { class: "answers" });
    this.root = h("section", {},
      h("h2", {}, "Ask"),
      h("div", { class: "row" }, this.input, h("button", { onclick: () => void this.submit() }, "Ask")),
      this.output,
    );
  }

  private async submit(): Promise<void> {
    const utterance = this.input.value.trim();
    if (!utterance) return;
    this.input.value = "";
    const block = h("article", { class: "card" },
      h("div", { class: "meta" }, `you: ${utterance}`));
    this.output.prepend(block);
    let answer: Answer;
    try {
      answer = await this.api.ask(utterance);
    } catch (err) {
      const reason = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      block.append(h("p", { class: "error" }, `could not parse that (${reason})`));
      return;
    }
    block.append(h("p", { class: "answer-text" }, answer.text));
    if (answer.data && "counts_by_label" in (answer.data as Summary)) {
      block.append(this.summaryTable(answer.data as Summary));
    }
  }

  private summaryTable(summary: Summary): HTMLElement {
    const rows = Object.entries(summary.counts_by_label).map(([label, count]) =>
      h("tr", {}, h("td", {}, label), h("td", {}, String(count))));
    const table = h("table", {},
      h("tr", {}, h("th", {}, "label"), h("th", {}, "events")),
      ...rows,
      h("tr", {}, h("td", {}, "known/unknown people"),
        h("td", {}, `${summary.known_count}/${summary.unknown_count}`)),
    );
    const parts: Array<Node | string> = [table];
    if (summary.first_event_ms !== null && summary.last_event_ms !== null) {
      parts.push(h("div", { class: "meta" },
        `${localTime(summary.first_event_ms)} → ${localTime(summary.last_event_ms)}`));
    }
    if (summary.range.from_ms !== null && this.openLibraryForDay) {
      const iso = new Date(summary.range.from_ms).toISOString().slice(0, 10);
      parts.push(h("button", {
        class: "secondary",
        onclick: () => this.openLibraryForDay!(iso),
      }, "open in library"));
    }
    return h("div", { class: "summary" }, ...parts);
  }
}
