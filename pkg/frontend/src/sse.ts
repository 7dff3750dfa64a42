// Server-sent events over fetch. EventSource cannot set the Authorization
// header, so the dashboard streams the response body and parses it here.

export type SseHandler = (eventName: string, payload: unknown) => void;

// Incremental parser; feed() accepts arbitrary chunk boundaries.
export function createSseParser(onEvent: SseHandler): (chunk: string) => void {
  let buffer = "";
  return (chunk: string) => {
    buffer += chunk;
    let idx: number;
    while ((idx = buffer.indexOf("\n\n")) >= 0) {
      const block = buffer.slice(0, idx);
      buffer = buffer.slice(idx + 2);
      let eventName = "message";
      const dataLines: string[] = [];
      for (const line of block.split("\n")) {
        if (line.startsWith(":")) continue; // comment / keep-alive
        if (line.startsWith("event:")) eventName = line.slice(6).trim();
        else if (line.startsWith("data:")) dataLines.push(line.slice(5).trim());
      }
      if (dataLines.length === 0) continue;
      try {
        onEvent(eventName, JSON.parse(dataLines.join("\n")));
      } catch {
        // Non-JSON data frames are dropped; the hub only sends JSON.
      }
    }
  };
}

export interface SseConnection {
  close(): void;
}

export function connectSse(
  url: string,
  headers: Record<string, string>,
  onEvent: SseHandler,
  onStatus?: (connected: boolean) => void,
  reconnectDelayMs = 2000,
): SseConnection {
  let closed = false;
  let controller: AbortController | null = null;

  const run = async () => {
    while (!closed) {
      controller = new AbortController();
      try {
        const resp = await fetch(url, { headers, signal: controller.signal });
        if (!resp.ok || !resp.body) throw new Error(`stream HTTP ${resp.status}`);
        onStatus?.(true);
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        const feed = createSseParser(onEvent);
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          feed(decoder.decode(value, { stream: true }));
        }
      } catch {
        // fall through to reconnect
      }
      onStatus?.(false);
      if (!closed) await new Promise((resolve) => setTimeout(resolve, reconnectDelayMs));
    }
  };
  void run();
  return {
    close() {
      closed = true;
      controller?.abort();
    },
  };
}
