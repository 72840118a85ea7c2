import { WeaverClient } from './api.js';
import { App } from './app.js';

function apiBase(): string {
  const meta = document.querySelector<HTMLMetaElement>('meta[name="weaver-api"]');
  if (meta !== null && meta.content.length > 0) {
    return meta.content;
  }
  const params = new URLSearchParams(window.location.search);
  return params.get('api') ?? 'http://127.0.0.1:8000';
}

const container = document.getElementById('app');
if (container === null) {
  throw new Error('missing #app container');
}

const app = new App({
  client: new WeaverClient(apiBase()),
  container,
});

void app.boot();
