// DOM glue: hash routing plus event wiring around the pure views. All data
// comes from the ApiClient; this file only moves strings into the page.

import { ApiClient, ApiError, OfflineError } from './api.js';
import {
  analysisPending,
  annotationList,
  errorPanel,
  offlineBanner,
  sessionDetailView,
  sessionListView,
  tokenPrompt,
} from './render.js';
import type { AnnotationDraft, TemperamentLabel } from './types.js';

const PAGE_SIZE = 10;

function apiBase(): string {
  const param = new URLSearchParams(window.location.search).get('api');
  return param ?? 'http://127.0.0.1:8763';
}

const client = new ApiClient(apiBase());
let currentPage = 1;

function root(): HTMLElement {
  return document.getElementById('app') as HTMLElement;
}

function handleFailure(err: unknown): void {
  if (err instanceof OfflineError) {
    root().innerHTML = offlineBanner(client.baseUrl);
  } else if (err instanceof ApiError && err.status === 401) {
    root().innerHTML = tokenPrompt();
  } else if (err instanceof ApiError) {
    root().innerHTML = errorPanel(`${err.status}: ${err.message}`);
  } else {
    root().innerHTML = errorPanel(String(err));
  }
}

async function showList(): Promise<void> {
  try {
    const slice = await client.listSessions(currentPage, PAGE_SIZE);
    root().innerHTML = sessionListView(slice);
  } catch (err) {
    handleFailure(err);
  }
}

async function showSession(id: string): Promise<void> {
  try {
    root().innerHTML = analysisPending(id);
    const record = await client.getSession(id);
    const analysis = record.analysis ?? (await client.getAnalysis(id));
    root().innerHTML = sessionDetailView(record, analysis);
  } catch (err) {
    handleFailure(err);
  }
}

function route(): void {
  const hash = window.location.hash;
  const detail = hash.match(/^#\/session\/(.+)$/);
  if (detail) {
    void showSession(decodeURIComponent(detail[1]));
  } else {
    void showList();
  }
}

function draftFromForm(form: HTMLFormElement): AnnotationDraft {
  const data = new FormData(form);
  const warm = String(data.get('warm_axis') ?? '');
  const wet = String(data.get('wet_axis') ?? '');
  let temperament: TemperamentLabel | null = null;
  if (warm && wet) {
    temperament = { warm_axis: warm, wet_axis: wet } as TemperamentLabel;
  }
  return {
    author: String(data.get('author') ?? '').trim(),
    temperament,
    note: String(data.get('note') ?? '').trim(),
  };
}

document.addEventListener('click', (event) => {
  const target = event.target as HTMLElement;
  const action = target.getAttribute('data-action');
  if (action === 'retry') route();
  if (action === 'prev-page' && currentPage > 1) {
    currentPage -= 1;
    void showList();
  }
  if (action === 'next-page') {
    currentPage += 1;
    void showList();
  }
});

document.addEventListener('submit', (event) => {
  const form = event.target as HTMLFormElement;
  if (form.getAttribute('data-form') === 'token') {
    event.preventDefault();
    client.token = String(new FormData(form).get('token') ?? '') || null;
    route();
    return;
  }
  if (form.getAttribute('data-form') !== 'annotation') return;
  event.preventDefault();
  const draft = draftFromForm(form);
  const status = form.querySelector('.form-error') as HTMLElement;
  if (!draft.author || (!draft.temperament && !draft.note)) {
    status.textContent = 'author plus a temperament or note required';
    return;
  }
  const detail = window.location.hash.match(/^#\/session\/(.+)$/);
  if (!detail) return;
  const id = decodeURIComponent(detail[1]);
  client
    .postAnnotation(id, draft)
    .then(({ annotations }) => {
      const list = document.querySelector('[data-role="annotations"]');
      if (list) list.outerHTML = annotationList(annotations);
      form.reset();
      status.textContent = '';
    })
    .catch((err) => {
      if (err instanceof ApiError && err.status === 401) {
        root().innerHTML = tokenPrompt();
      } else {
        status.textContent = String(err);
      }
    });
});

window.addEventListener('hashchange', route);
route();
