// DOM wiring: binds the query editor, the visual-weight slider and the
// result panes to the service. All ranking logic lives server-side; this
// file only moves state between widgets and the API client.

import { ApiClient } from "./api.js";
import { SearchCoordinator, type SearchOutcome } from "./coordinator.js";
import {
  renderChips,
  renderDroppedNotice,
  renderErrorBanner,
  renderGrid,
  renderWeightsBanner,
} from "./render.js";
import {
  addChip,
  canSearch,
  effectiveWeight,
  fromQueryString,
  initialState,
  markUnresolved,
  removeChip,
  setConnectivity,
  setImageKey,
  setK,
  setWeight,
  sliderDisabled,
  toQueryString,
  toSearchRequest,
  type QueryState,
} from "./state.js";
import type { ThumbnailMap } from "./types.js";

interface PaneElements {
  grid: HTMLElement;
  banner: HTMLElement;
  weights: HTMLElement;
  label: HTMLElement | null;
}

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

export class App {
  private state: QueryState;
  private thumbnails: ThumbnailMap = {};
  private client: ApiClient;
  private coordinatorA: SearchCoordinator;
  private coordinatorB: SearchCoordinator;
  private compare = false;
  private compareWeight = 0.4;

  constructor(client?: ApiClient) {
    this.client = client ?? new ApiClient();
    this.state = location.search.length > 1
      ? fromQueryString(location.search.slice(1))
      : initialState();
    this.coordinatorA = new SearchCoordinator(
      this.client, (outcome) => this.renderOutcome("a", outcome));
    this.coordinatorB = new SearchCoordinator(
      this.client, (outcome) => this.renderOutcome("b", outcome));
  }

  async start(): Promise<void> {
    this.thumbnails = await this.client.thumbnails();
    this.bind();
    this.syncControls();
    if (canSearch(this.state)) this.searchAll(true);
  }

  private pane(which: "a" | "b"): PaneElements {
    return {
      grid: $(`grid-${which}`),
      banner: $(`banner-${which}`),
      weights: $(`weights-${which}`),
      label: document.getElementById(`pane-label-${which}`),
    };
  }

  private bind(): void {
    const slider = $("weight-slider") as HTMLInputElement;
    slider.addEventListener("input", () => {
      this.state = setWeight(this.state, Number(slider.value));
      $("weight-value").textContent = this.state.visualWeight.toFixed(2);
      this.pushUrl();
      this.searchAll(false);
    });

    const chipInput = $("tag-input") as HTMLInputElement;
    chipInput.addEventListener("keydown", (ev) => {
      if (ev.key !== "Enter") return;
      ev.preventDefault();
      const result = addChip(this.state, chipInput.value);
      this.state = result.state;
      if ("rejected" in result && result.rejected === "duplicate") {
        chipInput.classList.add("flash");
        setTimeout(() => chipInput.classList.remove("flash"), 300);
      } else {
        chipInput.value = "";
      }
      this.syncControls();
      this.pushUrl();
      this.searchAll(true);
    });

    $("chips").addEventListener("click", (ev) => {
      const target = ev.target as HTMLElement;
      const tag = target.dataset.remove;
      if (!tag) return;
      this.state = removeChip(this.state, tag);
      this.syncControls();
      this.pushUrl();
      this.searchAll(true);
    });

    const imageInput = $("image-key") as HTMLInputElement;
    imageInput.addEventListener("change", async () => {
      const key = imageInput.value.trim();
      if (key) {
        try {
          const info = await this.client.node(key);
          if (info.kind !== "image") throw new Error(`${key} is a ${info.kind} node`);
          imageInput.classList.remove("invalid");
        } catch (err) {
          imageInput.classList.add("invalid");
          this.pane("a").banner.innerHTML =
            renderErrorBanner(err instanceof Error ? err.message : String(err));
          return;
        }
      }
      this.state = setImageKey(this.state, key || null);
      this.syncControls();
      this.pushUrl();
      this.searchAll(true);
    });

    const kInput = $("k-input") as HTMLInputElement;
    kInput.addEventListener("change", () => {
      this.state = setK(this.state, Number(kInput.value));
      this.pushUrl();
      this.searchAll(true);
    });

    const modeSelect = $("connectivity") as HTMLSelectElement;
    modeSelect.addEventListener("change", () => {
      this.state = setConnectivity(this.state,
        modeSelect.value as QueryState["connectivity"]);
      this.pushUrl();
      this.searchAll(true);
    });

    const compareToggle = $("compare-toggle") as HTMLInputElement;
    compareToggle.addEventListener("change", () => {
      this.compare = compareToggle.checked;
      $("pane-b").classList.toggle("hidden", !this.compare);
      const compareSlider = $("compare-slider") as HTMLInputElement;
      compareSlider.disabled = !this.compare;
      if (this.compare) this.searchAll(true);
    });

    const compareSlider = $("compare-slider") as HTMLInputElement;
    compareSlider.addEventListener("input", () => {
      this.compareWeight = Number(compareSlider.value);
      $("compare-value").textContent = this.compareWeight.toFixed(2);
      if (this.compare) this.searchPane("b", false);
    });
  }

  private syncControls(): void {
    ($("weight-slider") as HTMLInputElement).value = String(this.state.visualWeight);
    $("weight-value").textContent = effectiveWeight(this.state).toFixed(2);
    ($("weight-slider") as HTMLInputElement).disabled = sliderDisabled(this.state);
    ($("k-input") as HTMLInputElement).value = String(this.state.k);
    ($("connectivity") as HTMLSelectElement).value = this.state.connectivity;
    $("chips").innerHTML = renderChips(this.state.tags, this.state.unresolvedTags);
  }

  private pushUrl(): void {
    history.replaceState(null, "", "?" + toQueryString(this.state));
  }

  private searchAll(immediate: boolean): void {
    if (!canSearch(this.state)) return;
    this.searchPane("a", immediate);
    if (this.compare) this.searchPane("b", immediate);
  }

  private searchPane(which: "a" | "b", immediate: boolean): void {
    const coordinator = which === "a" ? this.coordinatorA : this.coordinatorB;
    const weight = which === "a" ? undefined : this.compareWeight;
    const request = toSearchRequest(this.state, weight);
    if (immediate) coordinator.requestNow(request);
    else coordinator.request(request);
    const label = this.pane(which).label;
    if (label) label.textContent = `w1 = ${request.visual_weight.toFixed(2)}`;
  }

  private renderOutcome(which: "a" | "b", outcome: SearchOutcome): void {
    const pane = this.pane(which);
    if (outcome.error) {
      // non-blocking: keep the previous grid, show the banner
      pane.banner.innerHTML = renderErrorBanner(outcome.error.message);
      return;
    }
    const response = outcome.response;
    if (!response) return;
    pane.banner.innerHTML = renderDroppedNotice(response.dropped_tags);
    pane.weights.innerHTML = renderWeightsBanner(response.effective_weights);
    pane.grid.innerHTML = renderGrid(response.results, this.thumbnails);
    if (which === "a" && response.dropped_tags.length > 0) {
      this.state = markUnresolved(this.state, response.dropped_tags);
      $("chips").innerHTML = renderChips(this.state.tags, this.state.unresolvedTags);
    }
  }
}
