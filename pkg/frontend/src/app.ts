import { ApiClient, ApiError } from "./api.js";
import { EvalOption, isDone, OPTION_LABELS, TaskPayload } from "./types.js";

/**
 * Single-page annotation flow: enter an annotator id, loop through the
 * assignment queue one blinded pair at a time, finish on a done screen.
 *
 * The server decides everything about pair order and side randomization;
 * this client only renders, guards double submits, and survives transient
 * network failures without losing state.
 */
export class AnnotationApp {
  private annotatorId: string | null = null;
  private current: TaskPayload | null = null;
  private selected: EvalOption | null = null;
  private submitting = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly doc: Document,
  ) {}

  start(): void {
    this.renderLogin();
  }

  /** Current screen name; handy for tests and debugging. */
  get screen(): string {
    return this.root.querySelector("section")?.id ?? "empty";
  }

  private clear(): HTMLElement {
    this.root.innerHTML = "";
    const section = this.doc.createElement("section");
    this.root.appendChild(section);
    return section;
  }

  private renderLogin(message?: string): void {
    const section = this.clear();
    section.id = "login";
    section.innerHTML = `
      <h1>Summary validity annotation</h1>
      <p>Enter your annotator id to begin.</p>
      <form>
        <input id="annotator-input" type="text" autocomplete="off" />
        <button id="start-button" type="submit">Start</button>
      </form>
      ${message ? `<p class="error" id="login-error"></p>` : ""}`;
    if (message) {
      section.querySelector("#login-error")!.textContent = message;
    }
    const form = section.querySelector("form")!;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const input = section.querySelector<HTMLInputElement>("#annotator-input")!;
      const value = input.value.trim();
      if (!value) {
        return;
      }
      this.annotatorId = value;
      void this.advance();
    });
  }

  /** Fetch and render the next unanswered item (or the done screen). */
  async advance(): Promise<void> {
    if (!this.annotatorId) {
      this.renderLogin();
      return;
    }
    try {
      const payload = await this.api.nextItem(this.annotatorId);
      if (isDone(payload)) {
        this.current = null;
        this.renderDone(payload.progress.total);
      } else {
        this.current = payload;
        this.selected = null;
        this.renderTask(payload);
      }
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.annotatorId = null;
        this.renderLogin("Unknown annotator id; check with the study organizer.");
        return;
      }
      this.renderRetry(() => void this.advance());
    }
  }

  private renderTask(task: TaskPayload): void {
    const section = this.clear();
    section.id = "task";
    const optionsHtml = OPTION_LABELS.map(
      ([value, label]) => `
        <label class="option">
          <input type="radio" name="validity" value="${value}" />
          <span>${label}</span>
        </label>`,
    ).join("");
    section.innerHTML = `
      <header>
        <h1>Which summaries are valid?</h1>
        <p id="progress">Question ${task.progress.done + 1} of ${task.progress.total}
          (${task.progress.done}/${task.progress.total} answered)</p>
      </header>
      <div class="pair">
        <article class="summary" id="summary-a">
          <h2>Summary A</h2>
          <p></p>
        </article>
        <article class="summary" id="summary-b">
          <h2>Summary B</h2>
          <p></p>
        </article>
      </div>
      <fieldset id="options">${optionsHtml}</fieldset>
      <button id="submit-button" disabled>Submit</button>
      <p class="error" id="task-error" hidden></p>`;
    section.querySelector("#summary-a p")!.textContent = task.summary_a;
    section.querySelector("#summary-b p")!.textContent = task.summary_b;

    const submitButton = section.querySelector<HTMLButtonElement>("#submit-button")!;
    for (const radio of Array.from(
      section.querySelectorAll<HTMLInputElement>("input[name=validity]"),
    )) {
      radio.addEventListener("change", () => {
        this.selected = radio.value as EvalOption;
        submitButton.disabled = false;
      });
    }
    submitButton.addEventListener("click", () => void this.submitCurrent());
  }

  /** Submit the selected option; double clicks collapse into one request. */
  async submitCurrent(): Promise<void> {
    if (!this.current || !this.annotatorId || !this.selected || this.submitting) {
      return;
    }
    this.submitting = true;
    const submitButton = this.root.querySelector<HTMLButtonElement>("#submit-button");
    if (submitButton) {
      submitButton.disabled = true;
    }
    try {
      // "conflict" means this item was already answered (e.g. another tab);
      // both outcomes advance the queue.
      await this.api.submit(this.current.item_id, this.annotatorId, this.selected);
      this.submitting = false;
      await this.advance();
    } catch {
      this.submitting = false;
      const errorBox = this.root.querySelector<HTMLElement>("#task-error");
      if (errorBox) {
        errorBox.hidden = false;
        errorBox.textContent = "Could not reach the server; your answer is kept. Retry.";
      }
      if (submitButton) {
        submitButton.disabled = false; // selection preserved, nothing lost
      }
    }
  }

  private renderDone(total: number): void {
    const section = this.clear();
    section.id = "done";
    section.innerHTML = `
      <h1>All done</h1>
      <p>You answered every assigned question (${total}/${total}). Thank you!</p>`;
  }

  private renderRetry(retry: () => void): void {
    const section = this.clear();
    section.id = "retry";
    section.innerHTML = `
      <h1>Connection problem</h1>
      <p class="error">The annotation service is unreachable. Nothing was lost.</p>
      <button id="retry-button">Retry</button>`;
    section.querySelector("#retry-button")!.addEventListener("click", retry);
  }
}
