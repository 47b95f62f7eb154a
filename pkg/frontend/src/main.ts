import { ApiClient } from "./api";
import { ReviewStore } from "./store";
import { renderApp } from "./views";
import type { Decision } from "./types";
import "./styles.css";

/** Mount the app on a root element; returns the store for console poking. */
export function mountApp(root: HTMLElement, api = new ApiClient()): ReviewStore {
  const store = new ReviewStore(api);

  const route = () => window.location.hash || "#/dashboard";

  const render = () => {
    root.innerHTML = renderApp(store, route());
  };

  store.subscribe(render);

  const onRouteChange = async () => {
    render();
    const match = route().match(/^#\/standard\/(\d+)$/);
    if (match) {
      try {
        await store.openStandard(Number(match[1]));
      } catch {
        store.offline = true;
        render();
      }
    }
  };

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.matches("button.decide")) {
      const standardRef = Number(target.dataset.standard);
      const specRef = Number(target.dataset.spec);
      const decision = target.dataset.decision as Decision;
      void store.recordDecision(specRef, standardRef, decision);
    } else if (target.dataset.role === "retry") {
      void store.flushPending().then(() => store.load());
    } else if (target.dataset.role === "export") {
      window.open("/api/export", "_blank");
    }
  });

  root.addEventListener("change", (event) => {
    const target = event.target as HTMLInputElement;
    if (target.dataset.role === "reviewer" && target.value.trim()) {
      store.reviewer = target.value.trim();
    }
  });

  window.addEventListener("hashchange", () => void onRouteChange());

  void store.load().then(onRouteChange);
  return store;
}

const rootElement = document.getElementById("app");
if (rootElement) {
  mountApp(rootElement);
}
