/** Chat window wiring: transcript, composer, session handling, attention
 * display. All transcript state comes from service responses, so reloading
 * the page restores the conversation from GET /sessions/{id}. */

import { ApiError, ChatApi, Reply, SILENCE } from "./api";
import { renderAttention } from "./attention";

const URL_KEY = "memdialog.serverUrl";
const SESSION_KEY = "memdialog.sessionId";

export class ChatApp {
  api: ChatApi | null = null;
  sessionId: string | null = null;
  busy = false;
  showAttention = false;
  /** Utterance texts in order; the model's memory for the next reply. */
  private historyTexts: string[] = [];

  private urlInput: HTMLInputElement;
  private connectButton: HTMLButtonElement;
  private modelLabel: HTMLElement;
  private transcript: HTMLElement;
  private input: HTMLInputElement;
  private sendButton: HTMLButtonElement;
  private silenceButton: HTMLButtonElement;
  private newSessionButton: HTMLButtonElement;
  private attentionToggle: HTMLInputElement;
  private errorLabel: HTMLElement;

  constructor(
    root: HTMLElement,
    private storage: Storage = window.sessionStorage,
  ) {
    root.innerHTML = `
      <header class="toolbar">
        <input class="server-url" placeholder="http://127.0.0.1:8080" />
        <button class="connect">Connect</button>
        <span class="model-id"></span>
        <button class="new-session" disabled>New session</button>
        <label><input type="checkbox" class="attention-toggle" /> Attention</label>
      </header>
      <main class="transcript"></main>
      <div class="error" role="alert"></div>
      <footer class="composer">
        <input class="message" placeholder="Say something…" disabled />
        <button class="send" disabled>Send</button>
        <button class="silence" disabled title="Send a silent turn">Silence</button>
      </footer>`;
    this.urlInput = root.querySelector(".server-url")!;
    this.connectButton = root.querySelector(".connect")!;
    this.modelLabel = root.querySelector(".model-id")!;
    this.transcript = root.querySelector(".transcript")!;
    this.input = root.querySelector(".message")!;
    this.sendButton = root.querySelector(".send")!;
    this.silenceButton = root.querySelector(".silence")!;
    this.newSessionButton = root.querySelector(".new-session")!;
    this.attentionToggle = root.querySelector(".attention-toggle")!;
    this.errorLabel = root.querySelector(".error")!;

    this.connectButton.addEventListener("click", () => {
      void this.connect(this.urlInput.value);
    });
    this.sendButton.addEventListener("click", () => {
      void this.send(this.input.value);
    });
    this.input.addEventListener("keydown", (e) => {
      if (e.key === "Enter") void this.send(this.input.value);
    });
    this.silenceButton.addEventListener("click", () => {
      void this.send(SILENCE);
    });
    this.newSessionButton.addEventListener("click", () => {
      void this.newSession();
    });
    this.attentionToggle.addEventListener("change", () => {
      this.setAttentionVisible(this.attentionToggle.checked);
    });

    const storedUrl = this.storage.getItem(URL_KEY);
    if (storedUrl) this.urlInput.value = storedUrl;
  }

  /** Connect, show the model id, and resume or open a session. */
  async connect(url: string): Promise<void> {
    this.clearError();
    const api = new ChatApi(url);
    try {
      const health = await api.health();
      this.api = api;
      this.modelLabel.textContent = `model: ${health.model}`;
      this.storage.setItem(URL_KEY, url);
      const stored = this.storage.getItem(SESSION_KEY);
      if (stored && (await this.tryRestore(stored))) {
        this.sessionId = stored;
      } else {
        await this.newSession();
      }
      this.setComposerEnabled(true);
      this.newSessionButton.disabled = false;
    } catch (err) {
      this.showError(err);
    }
  }

  private async tryRestore(sessionId: string): Promise<boolean> {
    try {
      const history = await this.api!.getHistory(sessionId);
      this.resetTranscript();
      for (const entry of history) {
        this.appendBubble(entry.speaker, entry.text);
        this.historyTexts.push(entry.text);
      }
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) return false;
      throw err;
    }
  }

  async newSession(): Promise<void> {
    if (!this.api) return;
    this.clearError();
    this.sessionId = await this.api.createSession();
    this.storage.setItem(SESSION_KEY, this.sessionId);
    this.resetTranscript();
  }

  /** One in-flight message at a time; the composer is disabled while the
   * reply is pending. */
  async send(text: string): Promise<void> {
    if (!this.api || !this.sessionId || this.busy) return;
    text = text.trim();
    if (!text) return;
    this.busy = true;
    this.setComposerEnabled(false);
    this.clearError();
    try {
      const reply = await this.api.sendMessage(this.sessionId, text);
      this.appendBubble("user", text, reply.unknown_words);
      this.appendReply(reply);
      this.historyTexts.push(text, reply.response);
      this.input.value = "";
    } catch (err) {
      this.showError(err);
    } finally {
      this.busy = false;
      this.setComposerEnabled(true);
    }
  }

  setAttentionVisible(visible: boolean): void {
    this.showAttention = visible;
    this.transcript
      .querySelectorAll<HTMLElement>(".attention")
      .forEach((el) => (el.hidden = !visible));
  }

  private appendBubble(
    speaker: "user" | "system",
    text: string,
    unknownWords: string[] = [],
  ): HTMLElement {
    const bubble = document.createElement("div");
    bubble.className = `bubble ${speaker}`;
    const unknown = new Set(unknownWords.map((w) => w.toLowerCase()));
    for (const word of text.split(/\s+/)) {
      if (bubble.childNodes.length > 0) {
        bubble.appendChild(document.createTextNode(" "));
      }
      if (unknown.has(word.toLowerCase())) {
        const u = document.createElement("u");
        u.className = "unknown-word";
        u.title = "word not in the model vocabulary";
        u.textContent = word;
        bubble.appendChild(u);
      } else {
        bubble.appendChild(document.createTextNode(word));
      }
    }
    this.transcript.appendChild(bubble);
    return bubble;
  }

  private appendReply(reply: Reply): void {
    this.appendBubble("system", reply.response);
    // the weights refer to the history as it was before this exchange
    const attention = renderAttention(
      reply.attention,
      this.historyTexts.slice(),
    );
    attention.hidden = !this.showAttention;
    this.transcript.appendChild(attention);
  }

  private resetTranscript(): void {
    this.transcript.innerHTML = "";
    this.historyTexts = [];
  }

  private setComposerEnabled(enabled: boolean): void {
    this.input.disabled = !enabled;
    this.sendButton.disabled = !enabled;
    this.silenceButton.disabled = !enabled;
  }

  private showError(err: unknown): void {
    this.errorLabel.textContent =
      err instanceof Error ? err.message : String(err);
  }

  private clearError(): void {
    this.errorLabel.textContent = "";
  }
}
