import { ApiClient, LabelInfo, resolveApiBase } from "./api.js";
import { SessionStore } from "./store.js";
import { renderError, renderHistory, renderVerdictCard } from "./view.js";

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

async function boot(): Promise<void> {
  const api = new ApiClient(resolveApiBase());
  const store = new SessionStore(api);

  const input = element<HTMLTextAreaElement>("claim-input");
  const submit = element<HTMLButtonElement>("submit-button");
  const verdict = element<HTMLDivElement>("verdict");
  const history = element<HTMLUListElement>("history");
  const status = element<HTMLDivElement>("status");

  let labelsByName = new Map<string, LabelInfo>();
  try {
    const taxonomy = await api.labels();
    labelsByName = new Map(taxonomy.labels.map((l) => [l.canonical_name, l]));
    status.textContent = "";
  } catch (err) {
    status.innerHTML = renderError(
      `Cannot reach the classifier API at ${api.baseUrl}: ${err instanceof Error ? err.message : err}`,
    );
  }

  const syncControls = () => {
    submit.disabled = input.value.trim() === "" || store.pending;
  };
  store.subscribe(syncControls);
  input.addEventListener("input", syncControls);
  syncControls();

  const refreshHistory = () => {
    history.innerHTML = renderHistory(store.history());
  };

  async function submitClaim(): Promise<void> {
    const outcome = await store.submit(input.value);
    if (outcome.kind === "ok") {
      status.innerHTML = "";
      verdict.innerHTML = renderVerdictCard(
        outcome.entry.prediction,
        labelsByName.get(outcome.entry.prediction.label),
      );
      refreshHistory();
    } else if (outcome.kind === "error") {
      status.innerHTML = renderError(outcome.message);
    }
    // stale outcomes are dropped silently: a newer submission superseded them
  }

  submit.addEventListener("click", () => void submitClaim());
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter" && (event.ctrlKey || event.metaKey) && !submit.disabled) {
      void submitClaim();
    }
  });

  // Clicking "edit" on a history entry loads the prior text for what-if
  // modification; submitting creates a new entry, never an overwrite.
  history.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (!target.classList.contains("history-load")) return;
    const index = Number(target.dataset.index);
    const entry = store.history()[index];
    if (entry) {
      input.value = entry.submittedText;
      input.focus();
      syncControls();
    }
  });
}

void boot();
