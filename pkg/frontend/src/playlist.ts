// Parser for the hub's rolling stream playlist (text/plain).

export interface PlaylistSegment {
  seq: number;
  durationMs: number;
  uri: string;
}

export interface Playlist {
  mediaSequence: number;
  ended: boolean;
  segments: PlaylistSegment[];
}

export function parsePlaylist(text: string): Playlist {
  const lines = text.split("\n").map((l) => l.trim()).filter((l) => l.length > 0);
  if (lines[0] !== "#PORCHM3U") throw new Error("not a porch playlist");
  const playlist: Playlist = { mediaSequence: 0, ended: false, segments: [] };
  let pendingDuration = 0;
  for (const line of lines.slice(1)) {
    if (line.startsWith("#VERSION:")) continue;
    if (line.startsWith("#MEDIA-SEQUENCE:")) {
      playlist.mediaSequence = parseInt(line.slice("#MEDIA-SEQUENCE:".length), 10);
    } else if (line.startsWith("#DURATION:")) {
      pendingDuration = parseInt(line.slice("#DURATION:".length), 10);
    } else if (line === "#ENDLIST") {
      playlist.ended = true;
    } else if (!line.startsWith("#")) {
      const seq = parseInt(line.slice(line.lastIndexOf("/") + 1), 10);
      playlist.segments.push({ seq, durationMs: pendingDuration, uri: line });
      pendingDuration = 0;
    }
  }
  return playlist;
}
