// App shell: one-time token login (kept in session storage), four tabs.

import { HubApi } from "./api.js";
import { clear, h } from "./dom.js";
import { AskView } from "./views/ask.js";
import { FeedView } from "./views/feed.js";
import { LibraryView } from "./views/library.js";
import { StreamView } from "./views/stream.js";

interface Login {
  hubUrl: string;
  token: string;
  subscriber: string;
}

const STORAGE_KEY = "porch-login";

function savedLogin(): Login | null {
  const raw = sessionStorage.getItem(STORAGE_KEY);
  if (!raw) return null;
  try {
    return JSON.parse(raw) as Login;
  } catch {
    return null;
  }
}

function loginScreen(root: HTMLElement, onDone: (login: Login) => void): void {
  // Same-origin default: the hub serves this bundle under /ui.
  const hubInput = h("input", { type: "text", value: window.location.origin }) as HTMLInputElement;
  const tokenInput = h("input", { type: "password", placeholder: "user token" }) as HTMLInputElement;
  const subInput = h("input", { type: "text", value: "dashboard" }) as HTMLInputElement;
  const error = h("p", { class: "error" });
  clear(root);
  root.append(h("section", { class: "login" },
    h("h1", {}, "porch"),
    h("label", {}, "hub URL", hubInput),
    h("label", {}, "user token", tokenInput),
    h("label", {}, "subscriber id", subInput),
    h("button", {
      onclick: async () => {
        const login: Login = {
          hubUrl: hubInput.value.trim(),
          token: tokenInput.value.trim(),
          subscriber: subInput.value.trim() || "dashboard",
        };
        try {
          await new HubApi(login.hubUrl, login.token).queryEvents({ limit: 1 });
        } catch (err) {
          error.textContent = `cannot sign in: ${(err as Error).message}`;
          return;
        }
        sessionStorage.setItem(STORAGE_KEY, JSON.stringify(login));
        onDone(login);
      },
    }, "Sign in"),
    error,
  ));
}

function app(root: HTMLElement, login: Login): void {
  const api = new HubApi(login.hubUrl, login.token);
  const library = new LibraryView(api);
  const stream = new StreamView(api);
  const ask = new AskView(api, (isoDate) => {
    library.setDayFilter(isoDate);
    void library.start();
    activate("library");
  });
  const feed = new FeedView(api, login.subscriber);

  const views: Record<string, HTMLElement> = {
    feed: feed.root,
    library: library.root,
    stream: stream.root,
    ask: ask.root,
  };
  const main = h("main", {});
  const tabs = new Map<string, HTMLButtonElement>();

  const activate = (name: string) => {
    clear(main);
    main.append(views[name]);
    for (const [tabName, btn] of tabs) {
      btn.className = tabName === name ? "tab active" : "tab";
    }
  };

  const nav = h("nav", {},
    h("span", { class: "brand" }, "porch"),
    ...Object.keys(views).map((name) => {
      const btn = h("button", { class: "tab", onclick: () => activate(name) },
        { feed: "Live feed", library: "Library", stream: "Live view", ask: "Ask" }[name]!,
      ) as HTMLButtonElement;
      tabs.set(name, btn);
      return btn;
    }),
    h("button", {
      class: "tab signout",
      onclick: () => {
        sessionStorage.removeItem(STORAGE_KEY);
        feed.stop();
        stream.stopPolling("");
        loginScreen(root, (l) => app(root, l));
      },
    }, "Sign out"),
  );

  clear(root);
  root.append(nav, main);
  activate("feed");
  void feed.start();
  void library.start();
  // Suggest the newest device for the live view.
  void api.queryEvents({ limit: 1 }).then((events) => {
    if (events.length > 0) stream.suggestDevice(events[0].device_id);
  }).catch(() => undefined);
}

const root = document.getElementById("app");
if (root) {
  const login = savedLogin();
  if (login) app(root, login);
  else loginScreen(root, (l) => app(root, l));
}
