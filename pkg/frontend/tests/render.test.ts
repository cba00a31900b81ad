import { describe, expect, it } from 'vitest';

import { renderApp } from '../src/render.js';
import { initialState, withResults } from '../src/state.js';

function dom(html: string): HTMLElement {
  const el = document.createElement('div');
  el.innerHTML = html;
  return el;
}

describe('renderApp', () => {
  it('renders tiles in exactly the order given, never re-sorting', () => {
    // deliberately unsorted input: the view must not fix it up
    const results = [
      { id: 'zz', distance: 0.9, thumbnail_url: '/thumb/zz' },
      { id: 'aa', distance: 0.1, thumbnail_url: '/thumb/aa' },
    ];
    const el = dom(renderApp(withResults(initialState(), results), false));
    const ids = [...el.querySelectorAll<HTMLElement>('.tile')].map((t) => t.dataset.id);
    expect(ids).toEqual(['zz', 'aa']);
  });

  it('shows the no-results placeholder for an empty list', () => {
    const el = dom(renderApp(withResults(initialState(), []), false));
    expect(el.querySelector('.empty-results')?.textContent).toBe('No results');
  });

  it('escapes ids in markup', () => {
    const results = [
      { id: '<img src=x onerror=alert(1)>', distance: 0.2, thumbnail_url: '/thumb/x' },
    ];
    const el = dom(renderApp(withResults(initialState(), results), false));
    expect(el.querySelector('figcaption')?.textContent).toContain('<img');
    expect(el.querySelectorAll('figure img')).toHaveLength(1); // only the thumbnail
  });

  it('offers back only when history exists', () => {
    expect(dom(renderApp(initialState(), false)).querySelector('[data-action="back"]')).toBeNull();
    expect(dom(renderApp(initialState(), true)).querySelector('[data-action="back"]')).not.toBeNull();
  });
});
