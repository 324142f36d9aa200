/** Typed client for the memdialog chat service JSON endpoints. */

export const SILENCE = "<SILENCE>";

export interface HealthInfo {
  status: string;
  model: string;
}

export interface Reply {
  session_id: string;
  response: string;
  /** Per-hop relevance weights over the history utterances. */
  attention: number[][];
  unknown_words: string[];
}

export interface HistoryEntry {
  speaker: "user" | "system";
  text: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

export class ChatApi {
  constructor(public baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = await res.json();
        if (typeof body.detail === "string") detail = body.detail;
      } catch {
        /* keep the status text */
      }
      throw new ApiError(res.status, detail);
    }
    return res.json() as Promise<T>;
  }

  health(): Promise<HealthInfo> {
    return this.request<HealthInfo>("/health");
  }

  async createSession(): Promise<string> {
    const body = await this.request<{ session_id: string }>("/sessions", {
      method: "POST",
    });
    return body.session_id;
  }

  sendMessage(sessionId: string, text: string): Promise<Reply> {
    return this.request<Reply>(`/sessions/${sessionId}/messages`, {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  async getHistory(sessionId: string): Promise<HistoryEntry[]> {
    const body = await this.request<{ history: HistoryEntry[] }>(
      `/sessions/${sessionId}`,
    );
    return body.history;
  }

  deleteSession(sessionId: string): Promise<unknown> {
    return this.request(`/sessions/${sessionId}`, { method: "DELETE" });
  }
}
